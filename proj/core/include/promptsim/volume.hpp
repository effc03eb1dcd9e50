#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "promptsim/errors.hpp"

namespace promptsim {

struct Dims {
  std::int64_t nx = 1;
  std::int64_t ny = 1;
  std::int64_t nz = 1;

  std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(nx * ny * nz);
  }
  bool contains(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return i >= 0 && j >= 0 && k >= 0 && i < nx && j < ny && k < nz;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Physical voxel size in millimetres.
struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  friend bool operator==(const Spacing&, const Spacing&) = default;
};

struct Index3 {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  friend bool operator==(const Index3&, const Index3&) = default;
  friend auto operator<=>(const Index3& a, const Index3& b) {
    if (auto c = a.k <=> b.k; c != 0) return c;
    if (auto c = a.j <=> b.j; c != 0) return c;
    return a.i <=> b.i;
  }
};

/// On-disk sample type. Values are held in memory as float regardless; every
/// supported type converts to float losslessly.
enum class DType : std::uint8_t { UInt8, Int16, Float32 };

std::string_view to_string(DType t) noexcept;
DType parse_dtype(std::string_view name);

/// Slicing convention: Transverse = planes of constant z, Longitudinal =
/// planes of constant x.
enum class SliceAxis : std::uint8_t { Transverse, Longitudinal };

std::string_view to_string(SliceAxis a) noexcept;
SliceAxis parse_slice_axis(std::string_view name);

void validate_geometry(const Dims& dims, const Spacing& spacing);

/// Dense 3D scalar field with physical spacing. Voxel (i,j,k) lives at flat
/// index i + nx*(j + ny*k).
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(Dims dims, Spacing spacing, DType dtype = DType::Float32);
  VoxelGrid(Dims dims, Spacing spacing, DType dtype, std::vector<float> data);

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  DType dtype() const noexcept { return dtype_; }
  void set_dtype(DType t) noexcept { dtype_ = t; }

  std::size_t size() const noexcept { return data_.size(); }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return static_cast<std::size_t>(i + dims_.nx * (j + dims_.ny * k));
  }
  float at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept { return data_[index(i, j, k)]; }
  float& at(std::int64_t i, std::int64_t j, std::int64_t k) noexcept { return data_[index(i, j, k)]; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
  DType dtype_ = DType::Float32;
  std::vector<float> data_;
};

/// A grid whose voxels are exactly 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(Dims dims, Spacing spacing);
  BinaryMask(Dims dims, Spacing spacing, std::vector<std::uint8_t> data);

  /// Voxels > 0.5 become 1. Used for masks loaded from files.
  static BinaryMask from_grid(const VoxelGrid& grid);
  VoxelGrid to_grid() const;

  const Dims& dims() const noexcept { return dims_; }
  const Spacing& spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const std::uint8_t> data() const noexcept { return data_; }
  std::span<std::uint8_t> data() noexcept { return data_; }

  std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return static_cast<std::size_t>(i + dims_.nx * (j + dims_.ny * k));
  }
  Index3 coords(std::size_t flat) const noexcept {
    const auto f = static_cast<std::int64_t>(flat);
    return {f % dims_.nx, (f / dims_.nx) % dims_.ny, f / (dims_.nx * dims_.ny)};
  }
  bool at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept { return data_[index(i, j, k)] != 0; }
  bool at(const Index3& v) const noexcept { return at(v.i, v.j, v.k); }
  void set(std::int64_t i, std::int64_t j, std::int64_t k, bool v) noexcept { data_[index(i, j, k)] = v ? 1 : 0; }
  void set(const Index3& v, bool on) noexcept { set(v.i, v.j, v.k, on); }

  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  bool same_geometry(const BinaryMask& other) const noexcept {
    return dims_ == other.dims_ && spacing_ == other.spacing_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
  std::vector<std::uint8_t> data_;
};

void require_same_geometry(const BinaryMask& a, const BinaryMask& b, std::string_view what);
void require_same_geometry(const VoxelGrid& a, const BinaryMask& b, std::string_view what);

BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b);
/// a AND NOT b
BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b);

/// Row-major 2D image, x fastest.
template <typename T>
struct Image2D {
  int width = 0;
  int height = 0;
  std::vector<T> pixels;

  Image2D() = default;
  Image2D(int w, int h, T fill = T{})
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
  bool contains(int x, int y) const noexcept { return x >= 0 && y >= 0 && x < width && y < height; }
  T at(int x, int y) const noexcept { return pixels[index(x, y)]; }
  T& at(int x, int y) noexcept { return pixels[index(x, y)]; }
  bool same_shape(const Image2D& o) const noexcept { return width == o.width && height == o.height; }

  friend bool operator==(const Image2D&, const Image2D&) = default;
};

using Binary2D = Image2D<std::uint8_t>;
using Scalar2D = Image2D<double>;

std::size_t count_foreground(const Binary2D& img) noexcept;

/// In-plane axes: (x, y) for Transverse, (y, z) for Longitudinal.
Binary2D extract_slice(const BinaryMask& mask, SliceAxis axis, std::int64_t index);
/// Overwrites plane `index` of `mask` with `plane`.
void insert_slice(BinaryMask& mask, const Binary2D& plane, SliceAxis axis, std::int64_t index);

std::int64_t slice_count(const Dims& dims, SliceAxis axis) noexcept;
/// Maps in-plane pixel (u, v) of slice `index` back to a voxel.
Index3 slice_to_voxel(SliceAxis axis, std::int64_t index, int u, int v) noexcept;
std::int64_t slice_of(SliceAxis axis, const Index3& v) noexcept;

}  // namespace promptsim
