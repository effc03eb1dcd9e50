#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "promptsim/volume.hpp"

namespace promptsim {

/// Synthetic subject generator: a smoothly deformed ellipsoid in speckled
/// two-level background, optionally with an acoustic-shadow-like ramp.
struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{1.0, 1.0, 1.0};
  /// Base ellipsoid semi-axes (mm); each is scaled by 1 + U(-jitter, jitter).
  std::array<double, 3> radii_mm{17.0, 13.0, 10.0};
  double radius_jitter = 0.2;
  /// Centre offset from the volume centre, uniform in +-centre_jitter_mm.
  double centre_jitter_mm = 4.0;
  /// Largest displacement (mm) of the smooth random deformation.
  double deformation_mm = 4.0;
  /// Spacing (mm) of the random control lattice the deformation is
  /// interpolated from; larger is smoother.
  double deformation_scale_mm = 10.0;
  /// Blur (mm) applied to the deformed indicator before thresholding at 0.5.
  double smoothing_mm = 1.5;
  /// Multiplicative log-normal speckle: exp(clamp(sigma * z, -3 sigma, 3 sigma)).
  double speckle_sigma = 0.25;
  double blur_mm = 0.8;
  double intensity_inside = 0.7;
  double intensity_outside = 0.3;
  bool shadow = false;
  /// 0, 1 or 2 for x, y, z.
  int shadow_axis = 1;
  /// Fractional intensity loss reached at the far end of the ramp.
  double shadow_attenuation = 0.6;
  int train_count = 0;
  int val_count = 0;
  int test_count = 20;
  std::uint64_t seed = 20240607;

  void validate() const;
  int total_count() const noexcept { return train_count + val_count + test_count; }
};

struct Phantom {
  VoxelGrid image;  // float32
  BinaryMask gt;
};

/// Deterministic per (spec.seed, index). The gt is a single 26-connected
/// component covering 2-20% of the volume; up to 10 draws are tried before
/// InvalidArgument is thrown.
Phantom generate_phantom(const PhantomSpec& spec, int index);

/// "phantom_007" style id used for files and records.
std::string phantom_id(int index);
/// Split a global index belongs to ("train", "val" or "test").
std::string phantom_split(const PhantomSpec& spec, int index);

}  // namespace promptsim
