#pragma once

#include <optional>

#include "promptsim/backend.hpp"

namespace promptsim {

struct RegionGrowParams {
  /// Accept voxels whose intensity is within this distance of the seed
  /// neighbourhood mean.
  double intensity_tolerance = 0.5;
  double max_geodesic_mm = 20.0;
  double barrier_radius_mm = 2.0;
};

/// Classical prompt-driven baseline: geodesic (6-connected, mm path length)
/// growth from all positive prompt voxels over intensity-compatible voxels.
/// Negative prompt voxels and their barrier balls are excluded for the rest
/// of the session. A box, when given, confines growth for the session.
class RegionGrowBackend final : public Segmenter {
 public:
  explicit RegionGrowBackend(RegionGrowParams params = {});

  BinaryMask segment(const SegmentationRequest& request) override;
  void end_session() override;

  const RegionGrowParams& params() const noexcept { return params_; }

 private:
  RegionGrowParams params_;
  std::optional<BinaryMask> barrier_;
  std::optional<BoxPrompt> box_;
  std::optional<BinaryMask> last_;
  bool seen_first_call_ = false;
};

/// Geodesic growth used by the backend, exposed for tests: voxels reachable
/// from `seeds` through 6-neighbour steps of length = spacing along the step
/// axis, with total path length <= max_geodesic_mm, through voxels for which
/// `passable(flat)` holds. Seeds themselves must be passable to be included.
template <typename Passable>
BinaryMask geodesic_grow(const Dims& dims, const Spacing& spacing, const std::vector<Index3>& seeds,
                         double max_geodesic_mm, Passable&& passable);

}  // namespace promptsim

#include "promptsim/detail/geodesic_grow.hpp"
