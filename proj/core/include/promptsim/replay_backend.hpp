#pragma once

#include <filesystem>

#include "promptsim/backend.hpp"

namespace promptsim {

/// Returns stored predictions verbatim: iteration k reads `iter_<k>.nii`
/// (or `iter_<k>.vgh`) from the directory.
class ReplayBackend final : public Segmenter {
 public:
  explicit ReplayBackend(std::filesystem::path directory);

  BinaryMask segment(const SegmentationRequest& request) override;

  std::filesystem::path path_for(int iteration) const;

 private:
  std::filesystem::path dir_;
};

/// Minimal prompt-dilation model: previous mask, plus balls of `radius_mm`
/// around positive prompt voxels, minus balls around negative ones. The
/// reference external bridge client implements the same rule.
class DilationBackend final : public Segmenter {
 public:
  explicit DilationBackend(double radius_mm = 3.0) : radius_mm_(radius_mm) {}
  BinaryMask segment(const SegmentationRequest& request) override;

 private:
  double radius_mm_;
};

}  // namespace promptsim
