#include "promptsim/bridge_frame.hpp"

#include <algorithm>
#include <cstring>

#include "byte_io.hpp"
#include "json.hpp"

using promptsim::byte_io::load_le;
using promptsim::byte_io::store_le;

namespace promptsim {
namespace {

using nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::uint8_t> assemble(const json& header, std::span<const std::uint8_t> payload) {
  const std::string text = header.dump();
  std::vector<std::uint8_t> out;
  out.reserve(text.size() + 1 + payload.size());
  out.insert(out.end(), text.begin(), text.end());
  out.push_back('\n');
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

json dims_json(const Dims& d) { return json::array({d.nx, d.ny, d.nz}); }

Dims dims_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw MalformedFrame("dims must be [nx,ny,nz]");
  Dims d{j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>()};
  if (d.nx <= 0 || d.ny <= 0 || d.nz <= 0) throw MalformedFrame("dims must be positive");
  if (static_cast<double>(d.nx) * static_cast<double>(d.ny) * static_cast<double>(d.nz) > 1e10) {
    throw MalformedFrame("dims too large");
  }
  return d;
}

std::vector<std::uint8_t> checked_mask(std::span<const std::uint8_t> payload) {
  if (std::any_of(payload.begin(), payload.end(), [](std::uint8_t v) { return v > 1; })) {
    throw MalformedFrame("mask payload values must be 0 or 1");
  }
  return {payload.begin(), payload.end()};
}

}  // namespace

std::string_view message_kind(const Message& m) noexcept {
  return std::visit(overloaded{
                        [](const msg::Hello&) { return std::string_view("HELLO"); },
                        [](const msg::SessionStart&) { return std::string_view("SESSION_START"); },
                        [](const msg::Prompts&) { return std::string_view("PROMPTS"); },
                        [](const msg::SegmentResult&) { return std::string_view("SEGMENT_RESULT"); },
                        [](const msg::ErrorReply&) { return std::string_view("ERROR"); },
                        [](const msg::SessionEnd&) { return std::string_view("SESSION_END"); },
                    },
                    m);
}

std::vector<std::uint8_t> encode_message(const Message& m) {
  json h;
  h["kind"] = message_kind(m);
  return std::visit(
      overloaded{
          [&](const msg::Hello& x) {
            h["version"] = x.version;
            h["capabilities"] = x.capabilities;
            h["payload_bytes"] = 0;
            return assemble(h, {});
          },
          [&](const msg::SessionStart& x) {
            if (x.image.size() != x.dims.voxel_count()) throw InvalidArgument("SESSION_START image size mismatch");
            std::vector<std::uint8_t> payload(x.image.size() * 4);
            for (std::size_t n = 0; n < x.image.size(); ++n) store_le(payload.data() + 4 * n, x.image[n]);
            h["session_id"] = x.session_id;
            h["dims"] = dims_json(x.dims);
            h["spacing"] = json::array({x.spacing.x, x.spacing.y, x.spacing.z});
            h["dtype"] = "float32";
            h["payload_bytes"] = payload.size();
            return assemble(h, payload);
          },
          [&](const msg::Prompts& x) {
            h["iteration"] = x.iteration;
            h["prompts"] = x.prompts;
            h["has_previous_mask"] = x.previous_mask.has_value();
            const std::size_t n = x.previous_mask ? x.previous_mask->size() : 0;
            h["payload_bytes"] = n;
            return assemble(h, x.previous_mask ? std::span<const std::uint8_t>(*x.previous_mask)
                                               : std::span<const std::uint8_t>());
          },
          [&](const msg::SegmentResult& x) {
            if (x.mask.size() != x.dims.voxel_count()) throw InvalidArgument("SEGMENT_RESULT mask size mismatch");
            h["iteration"] = x.iteration;
            h["dims"] = dims_json(x.dims);
            h["dtype"] = "uint8";
            h["payload_bytes"] = x.mask.size();
            return assemble(h, x.mask);
          },
          [&](const msg::ErrorReply& x) {
            h["code"] = x.code;
            h["message"] = x.message;
            h["payload_bytes"] = 0;
            return assemble(h, {});
          },
          [&](const msg::SessionEnd&) {
            h["payload_bytes"] = 0;
            return assemble(h, {});
          },
      },
      m);
}

Message decode_message(std::span<const std::uint8_t> body) {
  const auto nl = std::find(body.begin(), body.end(), std::uint8_t{'\n'});
  if (nl == body.end()) throw MalformedFrame("frame header is not terminated by a newline");
  const std::string text(body.begin(), nl);
  const std::span<const std::uint8_t> payload(nl + 1, body.end());
  json h;
  try {
    h = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedFrame(std::string("frame header is not valid JSON: ") + e.what());
  }
  try {
    if (!h.is_object()) throw MalformedFrame("frame header must be an object");
    const auto kind = h.at("kind").get<std::string>();
    const auto declared = h.at("payload_bytes").get<std::uint64_t>();
    if (declared != payload.size()) {
      throw MalformedFrame("payload_bytes " + std::to_string(declared) + " does not match " +
                           std::to_string(payload.size()) + " trailing bytes");
    }
    if (kind == "HELLO") {
      if (!payload.empty()) throw MalformedFrame("HELLO carries no payload");
      return msg::Hello{h.at("version").get<int>(), h.value("capabilities", std::vector<std::string>{})};
    }
    if (kind == "SESSION_START") {
      msg::SessionStart x;
      x.session_id = h.at("session_id").get<std::string>();
      x.dims = dims_from(h.at("dims"));
      const auto& s = h.at("spacing");
      if (!s.is_array() || s.size() != 3) throw MalformedFrame("spacing must be [x,y,z]");
      x.spacing = {s[0].get<double>(), s[1].get<double>(), s[2].get<double>()};
      if (!(x.spacing.x > 0 && x.spacing.y > 0 && x.spacing.z > 0)) throw MalformedFrame("spacing must be positive");
      if (h.at("dtype").get<std::string>() != "float32") throw MalformedFrame("SESSION_START dtype must be float32");
      if (payload.size() != 4 * x.dims.voxel_count()) throw MalformedFrame("image payload size does not match dims");
      x.image.resize(x.dims.voxel_count());
      for (std::size_t n = 0; n < x.image.size(); ++n) x.image[n] = load_le<float>(payload.data() + 4 * n);
      return x;
    }
    if (kind == "PROMPTS") {
      msg::Prompts x;
      x.iteration = h.at("iteration").get<int>();
      x.prompts = h.at("prompts").get<std::string>();
      if (h.at("has_previous_mask").get<bool>()) {
        x.previous_mask = checked_mask(payload);
      } else if (!payload.empty()) {
        throw MalformedFrame("PROMPTS without previous mask carries no payload");
      }
      return x;
    }
    if (kind == "SEGMENT_RESULT") {
      msg::SegmentResult x;
      x.iteration = h.at("iteration").get<int>();
      x.dims = dims_from(h.at("dims"));
      if (h.at("dtype").get<std::string>() != "uint8") throw MalformedFrame("SEGMENT_RESULT dtype must be uint8");
      if (payload.size() != x.dims.voxel_count()) throw MalformedFrame("mask payload size does not match dims");
      x.mask = checked_mask(payload);
      return x;
    }
    if (kind == "ERROR") {
      return msg::ErrorReply{h.at("code").get<std::string>(), h.value("message", std::string())};
    }
    if (kind == "SESSION_END") {
      if (!payload.empty()) throw MalformedFrame("SESSION_END carries no payload");
      return msg::SessionEnd{};
    }
    throw MalformedFrame("unknown message kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw MalformedFrame(std::string("frame header field error: ") + e.what());
  }
}

std::vector<std::uint8_t> frame_bytes(std::span<const std::uint8_t> body) {
  std::vector<std::uint8_t> out(8 + body.size());
  store_le(out.data(), static_cast<std::uint64_t>(body.size()));
  std::copy(body.begin(), body.end(), out.begin() + 8);
  return out;
}

void write_frame(ByteStream& s, std::span<const std::uint8_t> body) {
  std::uint8_t prefix[8];
  store_le(prefix, static_cast<std::uint64_t>(body.size()));
  s.write_all(prefix);
  s.write_all(body);
}

void write_message(ByteStream& s, const Message& m) { write_frame(s, encode_message(m)); }

std::optional<std::vector<std::uint8_t>> read_frame(ByteStream& s) {
  std::uint8_t prefix[8];
  try {
    s.read_exact(std::span<std::uint8_t>(prefix, 1));
  } catch (const ConnectionClosed&) {
    return std::nullopt;
  }
  s.read_exact(std::span<std::uint8_t>(prefix + 1, 7));
  const auto n = load_le<std::uint64_t>(prefix);
  if (n > kMaxFrameBytes) throw MalformedFrame("frame length " + std::to_string(n) + " exceeds limit");
  std::vector<std::uint8_t> body(n);
  s.read_exact(body);
  return body;
}

Message read_message(ByteStream& s) {
  auto body = read_frame(s);
  if (!body) throw ConnectionClosed("peer closed the connection");
  return decode_message(*body);
}

void BufferStream::write_all(std::span<const std::uint8_t> bytes) {
  output_.insert(output_.end(), bytes.begin(), bytes.end());
}

void BufferStream::read_exact(std::span<std::uint8_t> bytes) {
  if (input_.size() - pos_ < bytes.size()) {
    pos_ = input_.size();
    throw ConnectionClosed("end of buffered input");
  }
  std::memcpy(bytes.data(), input_.data() + pos_, bytes.size());
  pos_ += bytes.size();
}

}  // namespace promptsim
