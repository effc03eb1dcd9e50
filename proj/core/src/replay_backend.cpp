#include "promptsim/replay_backend.hpp"

#include "promptsim/native_format.hpp"

namespace promptsim {

ReplayBackend::ReplayBackend(std::filesystem::path directory) : dir_(std::move(directory)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw IoError("replay directory '" + dir_.string() + "' does not exist");
  }
}

std::filesystem::path ReplayBackend::path_for(int iteration) const {
  const std::string stem = "iter_" + std::to_string(iteration);
  for (const char* ext : {".nii", ".vgh"}) {
    auto p = dir_ / (stem + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return {};
}

BinaryMask ReplayBackend::segment(const SegmentationRequest& request) {
  const auto path = path_for(request.iteration);
  if (path.empty()) {
    throw IoError("replay: no stored prediction for iteration " + std::to_string(request.iteration) + " in '" +
                  dir_.string() + "'");
  }
  auto mask = read_mask(path);
  check_result_geometry(request, mask);
  return mask;
}

BinaryMask DilationBackend::segment(const SegmentationRequest& request) {
  if (!request.image) throw InvalidArgument("segmentation request has no image");
  const Dims& dims = request.image->dims();
  const Spacing& sp = request.image->spacing();
  BinaryMask out = request.previous_mask ? *request.previous_mask : BinaryMask(dims, sp);
  check_result_geometry(request, out);
  auto d = out.data();
  for (const auto& v : prompt_voxels(request.prompts, Polarity::Positive, dims)) {
    for_each_in_ball(dims, sp, v, radius_mm_, [&](std::size_t n) { d[n] = 1; });
  }
  for (const auto& v : prompt_voxels(request.prompts, Polarity::Negative, dims)) {
    for_each_in_ball(dims, sp, v, radius_mm_, [&](std::size_t n) { d[n] = 0; });
  }
  return out;
}

}  // namespace promptsim
