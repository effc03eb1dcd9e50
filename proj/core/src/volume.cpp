#include "promptsim/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace promptsim {

std::string_view to_string(DType t) noexcept {
  switch (t) {
    case DType::UInt8: return "uint8";
    case DType::Int16: return "int16";
    case DType::Float32: return "float32";
  }
  return "float32";
}

DType parse_dtype(std::string_view name) {
  if (name == "uint8") return DType::UInt8;
  if (name == "int16") return DType::Int16;
  if (name == "float32") return DType::Float32;
  throw InvalidArgument("unknown dtype '" + std::string(name) + "'");
}

std::string_view to_string(SliceAxis a) noexcept {
  return a == SliceAxis::Transverse ? "transverse" : "longitudinal";
}

SliceAxis parse_slice_axis(std::string_view name) {
  if (name == "transverse" || name == "T") return SliceAxis::Transverse;
  if (name == "longitudinal" || name == "L") return SliceAxis::Longitudinal;
  throw InvalidArgument("unknown slice axis '" + std::string(name) + "'");
}

void validate_geometry(const Dims& dims, const Spacing& spacing) {
  if (dims.nx <= 0 || dims.ny <= 0 || dims.nz <= 0) {
    throw InvalidArgument("grid dims must be positive");
  }
  for (double s : {spacing.x, spacing.y, spacing.z}) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw InvalidArgument("grid spacing must be positive and finite");
    }
  }
}

VoxelGrid::VoxelGrid(Dims dims, Spacing spacing, DType dtype)
    : dims_(dims), spacing_(spacing), dtype_(dtype) {
  validate_geometry(dims_, spacing_);
  data_.assign(dims_.voxel_count(), 0.0f);
}

VoxelGrid::VoxelGrid(Dims dims, Spacing spacing, DType dtype, std::vector<float> data)
    : dims_(dims), spacing_(spacing), dtype_(dtype), data_(std::move(data)) {
  validate_geometry(dims_, spacing_);
  if (data_.size() != dims_.voxel_count()) {
    throw InvalidArgument("grid data length does not match dims");
  }
}

BinaryMask::BinaryMask(Dims dims, Spacing spacing) : dims_(dims), spacing_(spacing) {
  validate_geometry(dims_, spacing_);
  data_.assign(dims_.voxel_count(), 0);
}

BinaryMask::BinaryMask(Dims dims, Spacing spacing, std::vector<std::uint8_t> data)
    : dims_(dims), spacing_(spacing), data_(std::move(data)) {
  validate_geometry(dims_, spacing_);
  if (data_.size() != dims_.voxel_count()) {
    throw InvalidArgument("mask data length does not match dims");
  }
  for (auto& v : data_) {
    if (v > 1) throw InvalidArgument("mask voxels must be 0 or 1");
  }
}

BinaryMask BinaryMask::from_grid(const VoxelGrid& grid) {
  BinaryMask m(grid.dims(), grid.spacing());
  auto src = grid.data();
  auto dst = m.data();
  for (std::size_t n = 0; n < src.size(); ++n) dst[n] = src[n] > 0.5f ? 1 : 0;
  return m;
}

VoxelGrid BinaryMask::to_grid() const {
  std::vector<float> values(data_.begin(), data_.end());
  return VoxelGrid(dims_, spacing_, DType::UInt8, std::move(values));
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

void require_same_geometry(const BinaryMask& a, const BinaryMask& b, std::string_view what) {
  if (!a.same_geometry(b)) {
    throw GeometryMismatch(std::string(what) + ": mask geometry mismatch");
  }
}

void require_same_geometry(const VoxelGrid& a, const BinaryMask& b, std::string_view what) {
  if (!(a.dims() == b.dims()) || !(a.spacing() == b.spacing())) {
    throw GeometryMismatch(std::string(what) + ": grid/mask geometry mismatch");
  }
}

namespace {
template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  require_same_geometry(a, b, "mask combine");
  BinaryMask out(a.dims(), a.spacing());
  auto da = a.data();
  auto db = b.data();
  auto d = out.data();
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = op(da[n], db[n]) ? 1 : 0;
  return out;
}
}  // namespace

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](std::uint8_t x, std::uint8_t y) { return x && y; });
}
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](std::uint8_t x, std::uint8_t y) { return x || y; });
}
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b) {
  return combine(a, b, [](std::uint8_t x, std::uint8_t y) { return x && !y; });
}

std::size_t count_foreground(const Binary2D& img) noexcept {
  return static_cast<std::size_t>(std::count_if(img.pixels.begin(), img.pixels.end(), [](auto p) { return p != 0; }));
}

std::int64_t slice_count(const Dims& dims, SliceAxis axis) noexcept {
  return axis == SliceAxis::Transverse ? dims.nz : dims.nx;
}

Index3 slice_to_voxel(SliceAxis axis, std::int64_t index, int u, int v) noexcept {
  if (axis == SliceAxis::Transverse) return {u, v, index};
  return {index, u, v};
}

std::int64_t slice_of(SliceAxis axis, const Index3& v) noexcept {
  return axis == SliceAxis::Transverse ? v.k : v.i;
}

namespace {
void check_slice_index(const Dims& dims, SliceAxis axis, std::int64_t index) {
  if (index < 0 || index >= slice_count(dims, axis)) {
    throw InvalidArgument("slice index " + std::to_string(index) + " out of range for " +
                          std::string(to_string(axis)) + " axis");
  }
}
}  // namespace

Binary2D extract_slice(const BinaryMask& mask, SliceAxis axis, std::int64_t index) {
  const Dims& d = mask.dims();
  check_slice_index(d, axis, index);
  if (axis == SliceAxis::Transverse) {
    Binary2D out(static_cast<int>(d.nx), static_cast<int>(d.ny));
    for (int y = 0; y < out.height; ++y)
      for (int x = 0; x < out.width; ++x) out.at(x, y) = mask.at(x, y, index) ? 1 : 0;
    return out;
  }
  Binary2D out(static_cast<int>(d.ny), static_cast<int>(d.nz));
  for (int v = 0; v < out.height; ++v)
    for (int u = 0; u < out.width; ++u) out.at(u, v) = mask.at(index, u, v) ? 1 : 0;
  return out;
}

void insert_slice(BinaryMask& mask, const Binary2D& plane, SliceAxis axis, std::int64_t index) {
  const Dims& d = mask.dims();
  check_slice_index(d, axis, index);
  const bool transverse = axis == SliceAxis::Transverse;
  const auto w = transverse ? d.nx : d.ny;
  const auto h = transverse ? d.ny : d.nz;
  if (plane.width != w || plane.height != h) {
    throw GeometryMismatch("insert_slice: plane shape does not match volume");
  }
  for (int v = 0; v < plane.height; ++v) {
    for (int u = 0; u < plane.width; ++u) {
      mask.set(slice_to_voxel(axis, index, u, v), plane.at(u, v) != 0);
    }
  }
}

}  // namespace promptsim
