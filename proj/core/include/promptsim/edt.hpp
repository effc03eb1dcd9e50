#pragma once

#include <vector>

#include "promptsim/volume.hpp"

namespace promptsim {

/// Per-voxel distances in millimetres, stored in double precision.
struct DistanceMap {
  Dims dims;
  Spacing spacing;
  std::vector<double> values;

  double at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return values[static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k))];
  }
};

/// Exact Euclidean distance from every voxel centre to the nearest
/// foreground voxel centre, honouring anisotropic spacing. Computed with the
/// separable lower-envelope-of-parabolas transform (one pass per axis over
/// squared distances). Throws EmptyMaskError on an empty mask.
DistanceMap edt_3d(const BinaryMask& mask);

/// Squared distances (mm^2); same algorithm without the final sqrt.
DistanceMap squared_edt_3d(const BinaryMask& mask);

}  // namespace promptsim
