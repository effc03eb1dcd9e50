#pragma once

#include <span>

#include "promptsim/volume.hpp"

namespace promptsim {

enum class Interpolation : std::uint8_t { Trilinear, Nearest };

/// Resamples onto an isotropic grid of `target_mm`. Output dims are
/// round-half-up(dims * spacing / target_mm), at least 1. Samples are taken
/// at output voxel centres with clamp-to-edge outside the input.
VoxelGrid resample_isotropic(const VoxelGrid& grid, double target_mm, Interpolation mode);
BinaryMask resample_isotropic(const BinaryMask& mask, double target_mm);

/// Linear-interpolation percentile: rank r = pct/100 * (n-1), interpolated
/// between the floor and ceil order statistics. `sorted` must be ascending.
double percentile_sorted(std::span<const double> sorted, double pct);
double percentile(std::span<const double> values, double pct);

struct PercentileBounds {
  double lo = 0.0;
  double hi = 0.0;
};

PercentileBounds foreground_percentiles(const VoxelGrid& grid, const BinaryMask& fg, double lo_pct, double hi_pct);

/// Clamps every voxel into the [lo_pct, hi_pct] percentile range of the
/// foreground voxels. Throws EmptyMaskError when fg is empty.
VoxelGrid clip_percentiles(const VoxelGrid& grid, const BinaryMask& fg, double lo_pct = 0.5, double hi_pct = 99.5);

/// (grid - mean_fg) / std_fg over all voxels; std is the population standard
/// deviation. Throws when fg has fewer than two voxels or zero variance.
VoxelGrid zscore_normalize(const VoxelGrid& grid, const BinaryMask& fg);

/// Voxels with intensity strictly above `threshold`.
BinaryMask foreground_by_intensity(const VoxelGrid& grid, double threshold = 0.0);

}  // namespace promptsim
