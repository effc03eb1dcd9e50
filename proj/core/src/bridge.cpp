#include "promptsim/bridge.hpp"

#include "promptsim/prompt_io.hpp"

namespace promptsim {

std::vector<std::string> bridge_capabilities() { return {"box", "points", "previous_mask", "scribbles"}; }

BridgeBackend::BridgeBackend(std::unique_ptr<ByteStream> stream) : stream_(std::move(stream)) {
  if (!stream_) throw InvalidArgument("bridge backend needs a stream");
  handshake();
}

BridgeBackend::BridgeBackend(std::unique_ptr<ChildProcess> child) : child_(std::move(child)) { handshake(); }

std::unique_ptr<BridgeBackend> BridgeBackend::spawn(const std::vector<std::string>& argv) {
  return std::unique_ptr<BridgeBackend>(new BridgeBackend(std::make_unique<ChildProcess>(argv)));
}

std::unique_ptr<BridgeBackend> BridgeBackend::connect(const std::string& host, std::uint16_t port) {
  return std::make_unique<BridgeBackend>(connect_tcp(host, port));
}

BridgeBackend::~BridgeBackend() {
  try {
    end_session();
  } catch (...) {
  }
}

void BridgeBackend::handshake() {
  write_message(stream(), msg::Hello{kBridgeProtocolVersion, bridge_capabilities()});
  auto reply = read_message(stream());
  if (auto* err = std::get_if<msg::ErrorReply>(&reply)) throw RemoteError(err->code, err->message);
  auto* hello = std::get_if<msg::Hello>(&reply);
  if (!hello) throw MalformedFrame("expected HELLO, got " + std::string(message_kind(reply)));
  if (hello->version != kBridgeProtocolVersion) {
    write_message(stream(), msg::ErrorReply{"version", "client speaks version " +
                                                           std::to_string(kBridgeProtocolVersion)});
    throw BridgeError("server speaks bridge protocol version " + std::to_string(hello->version));
  }
  server_hello_ = *hello;
}

BinaryMask BridgeBackend::segment(const SegmentationRequest& request) {
  if (!request.image) throw InvalidArgument("segmentation request has no image");
  if (finished_) throw BridgeError("bridge session already ended");
  const VoxelGrid& img = *request.image;
  if (!session_started_) {
    write_message(stream(), msg::SessionStart{request.session_id, img.dims(), img.spacing(),
                                              std::vector<float>(img.data().begin(), img.data().end())});
    session_started_ = true;
    session_id_ = request.session_id;
  } else if (request.session_id != session_id_) {
    throw BridgeError("bridge connection is bound to session '" + session_id_ + "'");
  }

  msg::Prompts p;
  p.iteration = request.iteration;
  p.prompts = serialize_prompt_set(request.prompts);
  if (request.previous_mask) {
    require_same_geometry(img, *request.previous_mask, "bridge previous mask");
    p.previous_mask.emplace(request.previous_mask->data().begin(), request.previous_mask->data().end());
  }
  write_message(stream(), p);

  auto reply = read_message(stream());
  if (auto* err = std::get_if<msg::ErrorReply>(&reply)) throw RemoteError(err->code, err->message);
  auto* result = std::get_if<msg::SegmentResult>(&reply);
  if (!result) throw MalformedFrame("expected SEGMENT_RESULT, got " + std::string(message_kind(reply)));
  if (!(result->dims == img.dims())) throw GeometryMismatch("bridge result dims differ from the session image");
  if (result->iteration != request.iteration) {
    throw MalformedFrame("SEGMENT_RESULT for iteration " + std::to_string(result->iteration) + ", expected " +
                         std::to_string(request.iteration));
  }
  return BinaryMask(img.dims(), img.spacing(), std::move(result->mask));
}

void BridgeBackend::end_session() {
  if (finished_) return;
  finished_ = true;
  if (session_started_) write_message(stream(), msg::SessionEnd{});
  stream().close_write();
  if (child_) child_->wait();
}

namespace {

ServeResult refuse(ByteStream& s, std::string code, std::string message) {
  try {
    write_message(s, msg::ErrorReply{std::move(code), std::move(message)});
    s.close_write();
  } catch (const BridgeError&) {
  }
  return ServeResult::ProtocolError;
}

}  // namespace

ServeResult serve_bridge(ByteStream& stream, const SegmenterFactory& factory) {
  bool greeted = false;
  std::unique_ptr<Segmenter> backend;
  BridgeSession session;

  for (;;) {
    std::optional<std::vector<std::uint8_t>> body;
    try {
      body = read_frame(stream);
    } catch (const MalformedFrame& e) {
      return refuse(stream, "malformed", e.what());
    } catch (const ConnectionClosed&) {
      return ServeResult::PeerClosed;
    }
    if (!body) return ServeResult::PeerClosed;

    Message m;
    try {
      m = decode_message(*body);
    } catch (const MalformedFrame& e) {
      return refuse(stream, "malformed", e.what());
    }

    if (auto* hello = std::get_if<msg::Hello>(&m)) {
      if (greeted) return refuse(stream, "protocol", "duplicate HELLO");
      if (hello->version != kBridgeProtocolVersion) {
        return refuse(stream, "version",
                      "unsupported protocol version " + std::to_string(hello->version) + ", server speaks " +
                          std::to_string(kBridgeProtocolVersion));
      }
      greeted = true;
      write_message(stream, msg::Hello{kBridgeProtocolVersion, bridge_capabilities()});
      continue;
    }
    if (!greeted) return refuse(stream, "protocol", std::string(message_kind(m)) + " before HELLO");

    if (auto* start = std::get_if<msg::SessionStart>(&m)) {
      if (backend) return refuse(stream, "protocol", "SESSION_START while a session is active");
      session.session_id = start->session_id;
      session.image = std::make_shared<const VoxelGrid>(start->dims, start->spacing, DType::Float32,
                                                        std::move(start->image));
      try {
        backend = factory(session);
      } catch (const std::exception& e) {
        return refuse(stream, "backend", e.what());
      }
      if (!backend) return refuse(stream, "backend", "no backend for this session");
      continue;
    }
    if (auto* prompts = std::get_if<msg::Prompts>(&m)) {
      if (!backend) return refuse(stream, "protocol", "PROMPTS before SESSION_START");
      SegmentationRequest req;
      req.image = session.image;
      req.session_id = session.session_id;
      req.iteration = prompts->iteration;
      try {
        req.prompts = parse_prompt_set(prompts->prompts);
      } catch (const ParseError& e) {
        return refuse(stream, "malformed", e.what());
      }
      if (prompts->previous_mask) {
        if (prompts->previous_mask->size() != session.image->dims().voxel_count()) {
          return refuse(stream, "geometry", "previous mask size does not match the session image");
        }
        req.previous_mask.emplace(session.image->dims(), session.image->spacing(), std::move(*prompts->previous_mask));
      }
      try {
        auto mask = backend->segment(req);
        check_result_geometry(req, mask);
        write_message(stream, msg::SegmentResult{req.iteration, mask.dims(),
                                                 std::vector<std::uint8_t>(mask.data().begin(), mask.data().end())});
      } catch (const BridgeError&) {
        throw;
      } catch (const std::exception& e) {
        write_message(stream, msg::ErrorReply{"backend", e.what()});
      }
      continue;
    }
    if (std::holds_alternative<msg::SessionEnd>(m)) {
      if (!backend) return refuse(stream, "protocol", "SESSION_END without a session");
      backend->end_session();
      stream.close_write();
      return ServeResult::Completed;
    }
    return refuse(stream, "protocol", "unexpected " + std::string(message_kind(m)) + " from client");
  }
}

}  // namespace promptsim
