#include "promptsim/native_format.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "byte_io.hpp"
#include "promptsim/nifti.hpp"

namespace promptsim {
namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::vector<T> parse_numbers(const std::string& key, const std::string& text, std::size_t expected) {
  std::vector<T> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) {
    T v{};
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
      throw ParseError(key, "cannot parse '" + tok + "'");
    }
    out.push_back(v);
  }
  if (out.size() != expected) throw ParseError(key, "expected " + std::to_string(expected) + " values");
  return out;
}

std::size_t bytes_per_voxel(DType t) {
  return t == DType::UInt8 ? 1 : t == DType::Int16 ? 2 : 4;
}

std::string lower_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

void write_native(const VoxelGrid& grid, const std::filesystem::path& header_path) {
  auto data_path = header_path;
  data_path.replace_extension(".vgd");
  {
    std::ofstream h(header_path, std::ios::trunc);
    if (!h) throw IoError("cannot open " + header_path.string() + " for writing");
    const auto& d = grid.dims();
    const auto& s = grid.spacing();
    h << "dims = " << d.nx << ' ' << d.ny << ' ' << d.nz << '\n'
      << "spacing = " << format_double(s.x) << ' ' << format_double(s.y) << ' ' << format_double(s.z) << '\n'
      << "dtype = " << to_string(grid.dtype()) << '\n'
      << "data_file = " << data_path.filename().string() << '\n';
    if (!h) throw IoError("write failed for " + header_path.string());
  }

  using namespace byte_io;
  const std::size_t bpv = bytes_per_voxel(grid.dtype());
  std::vector<unsigned char> bytes(grid.size() * bpv);
  auto values = grid.data();
  for (std::size_t n = 0; n < values.size(); ++n) {
    switch (grid.dtype()) {
      case DType::UInt8: bytes[n] = static_cast<unsigned char>(to_integral(values[n], 0.0f, 255.0f)); break;
      case DType::Int16:
        store_le<std::int16_t>(&bytes[2 * n], static_cast<std::int16_t>(to_integral(values[n], -32768.0f, 32767.0f)));
        break;
      case DType::Float32: store_le<float>(&bytes[4 * n], values[n]); break;
    }
  }
  std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + data_path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + data_path.string());
}

VoxelGrid read_native(const std::filesystem::path& header_path) {
  std::ifstream h(header_path);
  if (!h) throw IoError("cannot open " + header_path.string());
  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(h, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("header", "expected 'key = value', got '" + line + "'");
    fields[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  for (const char* key : {"dims", "spacing", "dtype", "data_file"}) {
    if (!fields.contains(key)) throw ParseError(key, "missing header field");
  }
  const auto d = parse_numbers<std::int64_t>("dims", fields["dims"], 3);
  const auto s = parse_numbers<double>("spacing", fields["spacing"], 3);
  DType dtype;
  try {
    dtype = parse_dtype(fields["dtype"]);
  } catch (const InvalidArgument& e) {
    throw ParseError("dtype", e.what());
  }
  const Dims dims{d[0], d[1], d[2]};
  const Spacing spacing{s[0], s[1], s[2]};
  try {
    validate_geometry(dims, spacing);
  } catch (const InvalidArgument& e) {
    throw ParseError("dims", e.what());
  }

  const auto data_path = header_path.parent_path() / fields["data_file"];
  std::ifstream in(data_path, std::ios::binary);
  if (!in) throw IoError("cannot open payload " + data_path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t count = dims.voxel_count();
  const std::size_t bpv = bytes_per_voxel(dtype);
  if (bytes.size() != count * bpv) {
    throw ParseError("data_file", "payload has " + std::to_string(bytes.size()) + " bytes, expected " +
                                      std::to_string(count * bpv));
  }
  using namespace byte_io;
  std::vector<float> values(count);
  for (std::size_t n = 0; n < count; ++n) {
    switch (dtype) {
      case DType::UInt8: values[n] = bytes[n]; break;
      case DType::Int16: values[n] = load_le<std::int16_t>(&bytes[2 * n]); break;
      case DType::Float32: values[n] = load_le<float>(&bytes[4 * n]); break;
    }
  }
  return VoxelGrid(dims, spacing, dtype, std::move(values));
}

VoxelGrid read_volume(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".nii") return read_nifti(path);
  if (ext == ".vgh") return read_native(path);
  throw InvalidArgument("unrecognized volume extension '" + ext + "' (expected .nii or .vgh)");
}

void write_volume(const VoxelGrid& grid, const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".nii") return write_nifti(grid, path);
  if (ext == ".vgh") return write_native(grid, path);
  throw InvalidArgument("unrecognized volume extension '" + ext + "' (expected .nii or .vgh)");
}

BinaryMask read_mask(const std::filesystem::path& path) { return BinaryMask::from_grid(read_volume(path)); }

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) { write_volume(mask.to_grid(), path); }

}  // namespace promptsim
