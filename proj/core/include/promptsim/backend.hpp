#pragma once

#include <memory>
#include <optional>
#include <string>

#include "promptsim/prompts.hpp"
#include "promptsim/volume.hpp"

namespace promptsim {

struct SegmentationRequest {
  std::shared_ptr<const VoxelGrid> image;  // float32 intensities
  PromptSet prompts;
  std::optional<BinaryMask> previous_mask;
  std::string session_id;
  int iteration = 0;
};

/// A segmentation engine driven by visual prompts. Implementations return a
/// mask with exactly the geometry of the request image and are deterministic
/// given the request sequence and their construction parameters. An instance
/// serves one session at a time.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual BinaryMask segment(const SegmentationRequest& request) = 0;
  /// Called once after the last request of a session.
  virtual void end_session() {}
};

/// Throws GeometryMismatch when `mask` does not match the request image.
void check_result_geometry(const SegmentationRequest& request, const BinaryMask& mask);

/// Every voxel whose centre lies within `radius_mm` of a prompt voxel centre
/// is passed to `visit` as a flat index (voxels may repeat across centres).
template <typename Visit>
void for_each_in_ball(const Dims& dims, const Spacing& spacing, const Index3& centre, double radius_mm, Visit&& visit);

/// Collects positive (or negative) prompt voxels: points and scribble voxels
/// that lie inside `dims`.
std::vector<Index3> prompt_voxels(const PromptSet& prompts, Polarity polarity, const Dims& dims);

// ---------------------------------------------------------------------------

template <typename Visit>
void for_each_in_ball(const Dims& dims, const Spacing& spacing, const Index3& centre, double radius_mm, Visit&& visit) {
  const auto ri = static_cast<std::int64_t>(radius_mm / spacing.x);
  const auto rj = static_cast<std::int64_t>(radius_mm / spacing.y);
  const auto rk = static_cast<std::int64_t>(radius_mm / spacing.z);
  const double r2 = radius_mm * radius_mm;
  for (std::int64_t k = centre.k - rk; k <= centre.k + rk; ++k) {
    if (k < 0 || k >= dims.nz) continue;
    const double dz = static_cast<double>(k - centre.k) * spacing.z;
    for (std::int64_t j = centre.j - rj; j <= centre.j + rj; ++j) {
      if (j < 0 || j >= dims.ny) continue;
      const double dy = static_cast<double>(j - centre.j) * spacing.y;
      for (std::int64_t i = centre.i - ri; i <= centre.i + ri; ++i) {
        if (i < 0 || i >= dims.nx) continue;
        const double dx = static_cast<double>(i - centre.i) * spacing.x;
        if (dx * dx + dy * dy + dz * dz <= r2) visit(static_cast<std::size_t>(i + dims.nx * (j + dims.ny * k)));
      }
    }
  }
}

}  // namespace promptsim
