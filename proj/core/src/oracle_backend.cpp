#include "promptsim/oracle_backend.hpp"

#include <algorithm>
#include <cmath>

#include "promptsim/components.hpp"
#include "promptsim/edt.hpp"
#include "promptsim/metrics.hpp"
#include "promptsim/morph.hpp"

namespace promptsim {

void check_result_geometry(const SegmentationRequest& request, const BinaryMask& mask) {
  if (!request.image) throw InvalidArgument("segmentation request has no image");
  require_same_geometry(*request.image, mask, "segmentation result");
}

std::vector<Index3> prompt_voxels(const PromptSet& prompts, Polarity polarity, const Dims& dims) {
  std::vector<Index3> out;
  for (const auto& p : prompts.points) {
    if (p.polarity == polarity && dims.contains(p.voxel.i, p.voxel.j, p.voxel.k)) out.push_back(p.voxel);
  }
  for (const auto& s : prompts.scribbles) {
    if (s.polarity != polarity) continue;
    for (const auto& v : s.voxels) {
      if (dims.contains(v.i, v.j, v.k)) out.push_back(v);
    }
  }
  return out;
}

OracleBackend::OracleBackend(BinaryMask gt, BinaryMask initial, double repair_radius_mm)
    : gt_(std::move(gt)), current_(std::move(initial)), repair_radius_mm_(repair_radius_mm) {
  require_same_geometry(gt_, current_, "oracle backend");
  if (!(repair_radius_mm_ >= 0.0)) throw InvalidArgument("repair radius must be >= 0");
}

OracleBackend OracleBackend::with_corruption(const BinaryMask& gt, const OracleParams& params, std::uint64_t seed) {
  Rng rng(seed);
  auto initial = corrupt_mask(gt, rng, params.corruption_dice_min, params.corruption_dice_max);
  return OracleBackend(gt, std::move(initial), params.repair_radius_mm);
}

BinaryMask OracleBackend::segment(const SegmentationRequest& request) {
  check_result_geometry(request, gt_);
  const Dims& dims = gt_.dims();
  const Spacing& sp = gt_.spacing();

  const auto fn = connected_components(mask_minus(gt_, current_), Connectivity3D::TwentySix);
  const auto fp = connected_components(mask_minus(current_, gt_), Connectivity3D::TwentySix);
  auto cur = current_.data();

  for (const auto& v : prompt_voxels(request.prompts, Polarity::Positive, dims)) {
    const auto label = fn.labels[gt_.index(v.i, v.j, v.k)];
    if (label == 0) continue;
    for_each_in_ball(dims, sp, v, repair_radius_mm_, [&](std::size_t n) {
      if (fn.labels[n] == label) cur[n] = 1;
    });
  }
  for (const auto& v : prompt_voxels(request.prompts, Polarity::Negative, dims)) {
    const auto label = fp.labels[gt_.index(v.i, v.j, v.k)];
    if (label == 0) continue;
    for_each_in_ball(dims, sp, v, repair_radius_mm_, [&](std::size_t n) {
      if (fp.labels[n] == label) cur[n] = 0;
    });
  }
  if (request.prompts.box) {
    const auto& box = *request.prompts.box;
    for (std::size_t n = 0; n < cur.size(); ++n) {
      if (cur[n] && !box.contains(current_.coords(n))) cur[n] = 0;
    }
  }
  return current_;
}

namespace {

BinaryMask ball_mask(const BinaryMask& like, const Index3& centre, double radius_mm) {
  BinaryMask out(like.dims(), like.spacing());
  auto d = out.data();
  for_each_in_ball(like.dims(), like.spacing(), centre, radius_mm, [&](std::size_t n) { d[n] = 1; });
  return out;
}

}  // namespace

BinaryMask corrupt_mask(const BinaryMask& gt, Rng& rng, double dice_min, double dice_max) {
  if (!(dice_min > 0.0 && dice_min <= dice_max && dice_max < 1.0)) {
    throw InvalidArgument("corruption Dice range must satisfy 0 < min <= max < 1");
  }
  const auto surface = surface_voxels_3d(gt);  // throws on empty gt
  const BinaryMask background = mask_minus(BinaryMask(gt.dims(), gt.spacing(), std::vector<std::uint8_t>(gt.size(), 1)), gt);
  // Depth of gt voxels below the surface, and distance of background voxels
  // from the object.
  const auto depth = background.empty() ? DistanceMap{} : edt_3d(background);
  const auto outside = edt_3d(gt);
  std::vector<std::size_t> near;
  for (std::size_t n = 0; n < gt.size(); ++n) {
    if (!gt.data()[n] && outside.values[n] >= 2.0 && outside.values[n] <= 6.0) near.push_back(n);
  }
  const double min_spacing = std::min({gt.spacing().x, gt.spacing().y, gt.spacing().z});
  const double step = 0.5 * min_spacing;
  const double max_radius = 0.5 * static_cast<double>(std::max({gt.dims().nx, gt.dims().ny, gt.dims().nz})) *
                            std::max({gt.spacing().x, gt.spacing().y, gt.spacing().z});

  for (int attempt = 0; attempt < 32; ++attempt) {
    const double target = rng.uniform(dice_min, dice_max);
    const Index3 cut = gt.coords(surface[rng.below(surface.size())]);
    std::optional<Index3> blob;
    if (!near.empty()) blob = gt.coords(near[rng.below(near.size())]);

    // Erosion: peel a layer of random depth (at most one voxel), backing off
    // when the layer alone would overshoot the target.
    double erosion = rng.uniform(0.0, 1.0) * min_spacing;
    BinaryMask base = gt;
    while (erosion > 0.0 && !depth.values.empty()) {
      base = gt;
      auto b = base.data();
      for (std::size_t n = 0; n < b.size(); ++n) {
        if (b[n] && depth.values[n] <= erosion) b[n] = 0;
      }
      if (dice(base, gt) > target && !base.empty()) break;
      erosion -= 0.25 * min_spacing;
      base = gt;
    }

    for (double r = step; r <= max_radius; r += step) {
      BinaryMask candidate = mask_minus(base, ball_mask(gt, cut, r));
      if (blob) candidate = mask_or(candidate, ball_mask(gt, *blob, r));
      const double d = dice(candidate, gt);
      if (d <= target) {
        if (d >= dice_min && d <= dice_max && !candidate.empty()) return candidate;
        break;
      }
    }
  }
  throw InvalidArgument("could not corrupt mask into the requested Dice range");
}

}  // namespace promptsim
