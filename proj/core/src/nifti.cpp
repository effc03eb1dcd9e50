#include "promptsim/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "byte_io.hpp"

namespace promptsim {
namespace {

// Field offsets in the 348-byte NIfTI-1 header.
constexpr std::size_t kOffSizeofHdr = 0;
constexpr std::size_t kOffDim = 40;
constexpr std::size_t kOffDatatype = 70;
constexpr std::size_t kOffBitpix = 72;
constexpr std::size_t kOffPixdim = 76;
constexpr std::size_t kOffVoxOffset = 108;
constexpr std::size_t kOffSclSlope = 112;
constexpr std::size_t kOffSclInter = 116;
constexpr std::size_t kOffXyztUnits = 123;
constexpr std::size_t kOffDescrip = 148;
constexpr std::size_t kOffQformCode = 252;
constexpr std::size_t kOffSformCode = 254;
constexpr std::size_t kOffMagic = 344;

constexpr std::int16_t kDtUInt8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtFloat32 = 16;

std::int32_t load_be_i32(const unsigned char* p) {
  return static_cast<std::int32_t>((std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
                                   (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]});
}

std::int16_t datatype_code(DType t) {
  switch (t) {
    case DType::UInt8: return kDtUInt8;
    case DType::Int16: return kDtInt16;
    case DType::Float32: return kDtFloat32;
  }
  return kDtFloat32;
}

std::size_t bytes_per_voxel(DType t) {
  switch (t) {
    case DType::UInt8: return 1;
    case DType::Int16: return 2;
    case DType::Float32: return 4;
  }
  return 4;
}

}  // namespace

VoxelGrid decode_nifti(const std::vector<char>& bytes, std::vector<std::string>* warnings) {
  using namespace byte_io;
  if (bytes.size() < kNiftiHeaderSize) {
    throw ParseError("sizeof_hdr", "file shorter than the 348-byte NIfTI-1 header");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::int32_t sizeof_hdr = load_le<std::int32_t>(p + kOffSizeofHdr);
  if (sizeof_hdr != 348) {
    if (load_be_i32(p + kOffSizeofHdr) == 348) {
      throw ParseError("sizeof_hdr", "big-endian NIfTI files are not supported");
    }
    throw ParseError("sizeof_hdr", "expected 348, got " + std::to_string(sizeof_hdr));
  }
  if (std::memcmp(p + kOffMagic, "n+1\0", 4) != 0) {
    if (std::memcmp(p + kOffMagic, "ni1\0", 4) == 0) {
      throw ParseError("magic", "two-file NIfTI (.hdr/.img) is not supported");
    }
    throw ParseError("magic", "expected \"n+1\\0\"");
  }

  std::int16_t dim[8];
  for (int n = 0; n < 8; ++n) dim[n] = load_le<std::int16_t>(p + kOffDim + 2 * n);
  const bool ok_rank = dim[0] == 3 || (dim[0] == 4 && dim[4] == 1);
  if (!ok_rank) {
    throw ParseError("dim", "only 3D volumes (or 4D with dim[4]=1) are supported, dim[0]=" + std::to_string(dim[0]));
  }
  if (dim[1] <= 0 || dim[2] <= 0 || dim[3] <= 0) {
    throw ParseError("dim", "non-positive extent");
  }

  const std::int16_t datatype = load_le<std::int16_t>(p + kOffDatatype);
  DType dtype;
  switch (datatype) {
    case kDtUInt8: dtype = DType::UInt8; break;
    case kDtInt16: dtype = DType::Int16; break;
    case kDtFloat32: dtype = DType::Float32; break;
    default:
      throw ParseError("datatype", "unsupported datatype code " + std::to_string(datatype));
  }
  const std::int16_t bitpix = load_le<std::int16_t>(p + kOffBitpix);
  if (static_cast<std::size_t>(bitpix) != 8 * bytes_per_voxel(dtype)) {
    throw ParseError("bitpix", "bitpix " + std::to_string(bitpix) + " inconsistent with datatype");
  }

  Spacing spacing{load_le<float>(p + kOffPixdim + 4), load_le<float>(p + kOffPixdim + 8),
                  load_le<float>(p + kOffPixdim + 12)};
  for (double s : {spacing.x, spacing.y, spacing.z}) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ParseError("pixdim", "spacing must be positive and finite");
  }

  const float vox_offset_f = load_le<float>(p + kOffVoxOffset);
  if (!(vox_offset_f >= static_cast<float>(kNiftiHeaderSize)) || vox_offset_f != std::floor(vox_offset_f)) {
    throw ParseError("vox_offset", "invalid voxel offset");
  }
  const auto vox_offset = static_cast<std::size_t>(vox_offset_f);

  if (warnings != nullptr) {
    if (load_le<std::int16_t>(p + kOffQformCode) != 0 || load_le<std::int16_t>(p + kOffSformCode) != 0) {
      warnings->emplace_back("qform/sform orientation ignored; only pixdim spacing is used");
    }
  }

  const Dims dims{dim[1], dim[2], dim[3]};
  const std::size_t count = dims.voxel_count();
  const std::size_t payload = count * bytes_per_voxel(dtype);
  if (bytes.size() < vox_offset || bytes.size() - vox_offset < payload) {
    throw ParseError("payload", "truncated voxel data: need " + std::to_string(payload) + " bytes at offset " +
                                    std::to_string(vox_offset));
  }

  std::vector<float> values(count);
  const unsigned char* src = p + vox_offset;
  for (std::size_t n = 0; n < count; ++n) {
    switch (dtype) {
      case DType::UInt8: values[n] = static_cast<float>(src[n]); break;
      case DType::Int16: values[n] = static_cast<float>(load_le<std::int16_t>(src + 2 * n)); break;
      case DType::Float32: values[n] = load_le<float>(src + 4 * n); break;
    }
  }

  const float slope = load_le<float>(p + kOffSclSlope);
  const float inter = load_le<float>(p + kOffSclInter);
  if (slope != 0.0f && std::isfinite(slope) && !(slope == 1.0f && inter == 0.0f)) {
    for (auto& v : values) v = v * slope + inter;
    dtype = DType::Float32;
  }
  return VoxelGrid(dims, spacing, dtype, std::move(values));
}

VoxelGrid read_nifti(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_nifti(bytes, warnings);
}

std::vector<char> encode_nifti(const VoxelGrid& grid) {
  using namespace byte_io;
  const Dims& d = grid.dims();
  if (d.nx > 32767 || d.ny > 32767 || d.nz > 32767) {
    throw InvalidArgument("NIfTI-1 extents are limited to 32767");
  }
  const std::size_t bpv = bytes_per_voxel(grid.dtype());
  std::vector<char> bytes(kNiftiVoxOffset + grid.size() * bpv, 0);
  auto* p = reinterpret_cast<unsigned char*>(bytes.data());

  store_le<std::int32_t>(p + kOffSizeofHdr, 348);
  const std::int16_t dim[8] = {3, static_cast<std::int16_t>(d.nx), static_cast<std::int16_t>(d.ny),
                               static_cast<std::int16_t>(d.nz), 1, 1, 1, 1};
  for (int n = 0; n < 8; ++n) store_le<std::int16_t>(p + kOffDim + 2 * n, dim[n]);
  store_le<std::int16_t>(p + kOffDatatype, datatype_code(grid.dtype()));
  store_le<std::int16_t>(p + kOffBitpix, static_cast<std::int16_t>(8 * bpv));
  const float pixdim[8] = {1.0f,
                           static_cast<float>(grid.spacing().x),
                           static_cast<float>(grid.spacing().y),
                           static_cast<float>(grid.spacing().z),
                           1.0f, 1.0f, 1.0f, 1.0f};
  for (int n = 0; n < 8; ++n) store_le<float>(p + kOffPixdim + 4 * n, pixdim[n]);
  store_le<float>(p + kOffVoxOffset, static_cast<float>(kNiftiVoxOffset));
  store_le<float>(p + kOffSclSlope, 1.0f);
  store_le<float>(p + kOffSclInter, 0.0f);
  p[kOffXyztUnits] = 2;  // NIFTI_UNITS_MM
  const char descrip[] = "promptsim";
  std::memcpy(p + kOffDescrip, descrip, sizeof(descrip) - 1);
  std::memcpy(p + kOffMagic, "n+1\0", 4);

  unsigned char* dst = p + kNiftiVoxOffset;
  auto values = grid.data();
  for (std::size_t n = 0; n < values.size(); ++n) {
    switch (grid.dtype()) {
      case DType::UInt8: dst[n] = static_cast<unsigned char>(to_integral(values[n], 0.0f, 255.0f)); break;
      case DType::Int16:
        store_le<std::int16_t>(dst + 2 * n, static_cast<std::int16_t>(to_integral(values[n], -32768.0f, 32767.0f)));
        break;
      case DType::Float32: store_le<float>(dst + 4 * n, values[n]); break;
    }
  }
  return bytes;
}

void write_nifti(const VoxelGrid& grid, const std::filesystem::path& path) {
  const auto bytes = encode_nifti(grid);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace promptsim
