#pragma once

#include "promptsim/backend.hpp"
#include "promptsim/rng.hpp"

namespace promptsim {

struct OracleParams {
  double repair_radius_mm = 8.0;
  /// Initial corruption is sized so Dice(corrupted, gt) lands in this range.
  double corruption_dice_min = 0.6;
  double corruption_dice_max = 0.85;
};

/// Cooperative stand-in for a trained model. It holds the ground truth and a
/// current mask (a corrupted copy of gt) and repairs the current mask around
/// every prompt voxel:
///   positive voxel in an FN component -> that component's voxels within
///     repair_radius_mm are added;
///   negative voxel in an FP component -> that component's voxels within the
///     radius are removed;
///   box -> everything outside the box is removed.
/// FN/FP components (26-connected) are taken from the state at the start of
/// the request, so the update does not depend on prompt order. Every change
/// moves a voxel towards gt, so Dice never decreases.
class OracleBackend final : public Segmenter {
 public:
  OracleBackend(BinaryMask gt, BinaryMask initial, double repair_radius_mm = 8.0);

  /// Builds the backend with a corrupted starting mask drawn from `seed`.
  static OracleBackend with_corruption(const BinaryMask& gt, const OracleParams& params, std::uint64_t seed);

  BinaryMask segment(const SegmentationRequest& request) override;

  const BinaryMask& current() const noexcept { return current_; }
  const BinaryMask& ground_truth() const noexcept { return gt_; }

 private:
  BinaryMask gt_;
  BinaryMask current_;
  double repair_radius_mm_;
};

/// Removes a ball-shaped piece of gt and adds an off-target ball next to it,
/// growing both radii until Dice(result, gt) falls to a target drawn
/// uniformly from [dice_min, dice_max]. Retries with new centres when the
/// step overshoots the range; throws InvalidArgument when no attempt lands.
BinaryMask corrupt_mask(const BinaryMask& gt, Rng& rng, double dice_min, double dice_max);

}  // namespace promptsim
