#include "promptsim/region_grow_backend.hpp"

#include <cmath>

namespace promptsim {

RegionGrowBackend::RegionGrowBackend(RegionGrowParams params) : params_(params) {
  if (!(params_.intensity_tolerance >= 0.0) || !(params_.max_geodesic_mm >= 0.0) ||
      !(params_.barrier_radius_mm >= 0.0)) {
    throw InvalidArgument("region grow parameters must be >= 0");
  }
}

void RegionGrowBackend::end_session() {
  barrier_.reset();
  box_.reset();
  last_.reset();
  seen_first_call_ = false;
}

BinaryMask RegionGrowBackend::segment(const SegmentationRequest& request) {
  if (!request.image) throw InvalidArgument("segmentation request has no image");
  const VoxelGrid& img = *request.image;
  const Dims& dims = img.dims();
  const Spacing& sp = img.spacing();

  const auto positives = prompt_voxels(request.prompts, Polarity::Positive, dims);
  if (!seen_first_call_ && positives.empty()) {
    throw InvalidArgument("region grow needs at least one positive prompt on the first request");
  }
  seen_first_call_ = true;
  if (request.prompts.box) box_ = request.prompts.box;

  if (!barrier_ || !(barrier_->dims() == dims) || !(barrier_->spacing() == sp)) barrier_ = BinaryMask(dims, sp);
  auto bar = barrier_->data();
  for (const auto& v : prompt_voxels(request.prompts, Polarity::Negative, dims)) {
    for_each_in_ball(dims, sp, v, params_.barrier_radius_mm, [&](std::size_t n) { bar[n] = 1; });
  }

  BinaryMask result(dims, sp);
  if (!positives.empty()) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& s : positives) {
      for (std::int64_t dk = -1; dk <= 1; ++dk)
        for (std::int64_t dj = -1; dj <= 1; ++dj)
          for (std::int64_t di = -1; di <= 1; ++di) {
            if (!dims.contains(s.i + di, s.j + dj, s.k + dk)) continue;
            sum += img.at(s.i + di, s.j + dj, s.k + dk);
            ++count;
          }
    }
    const double mean = sum / static_cast<double>(count);
    const auto values = img.data();
    const double tol = params_.intensity_tolerance;
    const std::optional<BoxPrompt> box = box_;
    result = geodesic_grow(dims, sp, positives, params_.max_geodesic_mm, [&](std::size_t n) {
      if (bar[n]) return false;
      if (box && !box->contains(result.coords(n))) return false;
      return std::abs(static_cast<double>(values[n]) - mean) <= tol;
    });
  }

  const BinaryMask* previous = request.previous_mask ? &*request.previous_mask : (last_ ? &*last_ : nullptr);
  if (previous && previous->dims() == dims && previous->spacing() == sp) result = mask_or(result, *previous);
  result = mask_minus(result, *barrier_);
  last_ = result;
  return result;
}

}  // namespace promptsim
