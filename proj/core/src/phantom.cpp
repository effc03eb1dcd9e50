#include "promptsim/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "promptsim/components.hpp"
#include "promptsim/morph.hpp"
#include "promptsim/rng.hpp"

namespace promptsim {

void PhantomSpec::validate() const {
  validate_geometry(dims, spacing);
  for (double r : radii_mm) {
    if (!(r > 0.0)) throw InvalidArgument("phantom radii must be positive");
  }
  if (!(radius_jitter >= 0.0 && radius_jitter < 1.0)) throw InvalidArgument("radius_jitter must be in [0, 1)");
  if (!(centre_jitter_mm >= 0.0) || !(deformation_mm >= 0.0) || !(deformation_scale_mm > 0.0) ||
      !(smoothing_mm >= 0.0) || !(speckle_sigma >= 0.0) || !(blur_mm >= 0.0)) {
    throw InvalidArgument("phantom lengths and noise levels must be non-negative");
  }
  if (shadow_axis < 0 || shadow_axis > 2) throw InvalidArgument("shadow_axis must be 0, 1 or 2");
  if (!(shadow_attenuation >= 0.0 && shadow_attenuation <= 1.0)) {
    throw InvalidArgument("shadow_attenuation must be in [0, 1]");
  }
  if (train_count < 0 || val_count < 0 || test_count < 0 || total_count() == 0) {
    throw InvalidArgument("phantom split counts must be >= 0 with a positive total");
  }
}

std::string phantom_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "phantom_%03d", index);
  return buf;
}

std::string phantom_split(const PhantomSpec& spec, int index) {
  if (index < spec.train_count) return "train";
  if (index < spec.train_count + spec.val_count) return "val";
  return "test";
}

namespace {

/// Smooth random displacement: normal draws on a coarse lattice, trilinearly
/// interpolated to voxel centres and rescaled to the requested peak.
std::array<std::vector<double>, 3> random_displacement(const PhantomSpec& spec, Rng& rng) {
  const Dims& d = spec.dims;
  const Spacing& s = spec.spacing;
  const double step = spec.deformation_scale_mm;
  const std::int64_t cx = static_cast<std::int64_t>(std::ceil(d.nx * s.x / step)) + 2;
  const std::int64_t cy = static_cast<std::int64_t>(std::ceil(d.ny * s.y / step)) + 2;
  const std::int64_t cz = static_cast<std::int64_t>(std::ceil(d.nz * s.z / step)) + 2;
  std::array<std::vector<double>, 3> field;
  for (auto& c : field) c.assign(d.voxel_count(), 0.0);
  if (spec.deformation_mm == 0.0) return field;

  std::array<std::vector<double>, 3> lattice;
  for (auto& c : lattice) {
    c.resize(static_cast<std::size_t>(cx * cy * cz));
    for (auto& v : c) v = rng.normal();
  }
  double peak = 0.0;
  for (std::int64_t k = 0; k < d.nz; ++k) {
    const double fz = (k + 0.5) * s.z / step;
    const auto z0 = static_cast<std::int64_t>(fz);
    const double wz = fz - z0;
    for (std::int64_t j = 0; j < d.ny; ++j) {
      const double fy = (j + 0.5) * s.y / step;
      const auto y0 = static_cast<std::int64_t>(fy);
      const double wy = fy - y0;
      for (std::int64_t i = 0; i < d.nx; ++i) {
        const double fx = (i + 0.5) * s.x / step;
        const auto x0 = static_cast<std::int64_t>(fx);
        const double wx = fx - x0;
        const std::size_t n = static_cast<std::size_t>(i + d.nx * (j + d.ny * k));
        double mag2 = 0.0;
        for (int c = 0; c < 3; ++c) {
          double v = 0.0;
          for (int dz = 0; dz < 2; ++dz)
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const double w = (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy) * (dz ? wz : 1 - wz);
                v += w * lattice[c][static_cast<std::size_t>((x0 + dx) + cx * ((y0 + dy) + cy * (z0 + dz)))];
              }
          field[c][n] = v;
          mag2 += v * v;
        }
        peak = std::max(peak, mag2);
      }
    }
  }
  peak = std::sqrt(peak);
  if (peak > 0.0) {
    const double scale = spec.deformation_mm / peak;
    for (auto& c : field)
      for (auto& v : c) v *= scale;
  }
  return field;
}

std::array<double, 3> mm_to_vox(double mm, const Spacing& s) { return {mm / s.x, mm / s.y, mm / s.z}; }

BinaryMask draw_gt(const PhantomSpec& spec, Rng& rng) {
  const Dims& d = spec.dims;
  const Spacing& s = spec.spacing;
  std::array<double, 3> r;
  for (int a = 0; a < 3; ++a) r[a] = spec.radii_mm[a] * (1.0 + rng.uniform(-spec.radius_jitter, spec.radius_jitter));
  const std::array<double, 3> c{0.5 * d.nx * s.x + rng.uniform(-spec.centre_jitter_mm, spec.centre_jitter_mm),
                                0.5 * d.ny * s.y + rng.uniform(-spec.centre_jitter_mm, spec.centre_jitter_mm),
                                0.5 * d.nz * s.z + rng.uniform(-spec.centre_jitter_mm, spec.centre_jitter_mm)};
  const auto disp = random_displacement(spec, rng);

  VoxelGrid indicator(d, s, DType::Float32);
  auto v = indicator.data();
  for (std::int64_t k = 0; k < d.nz; ++k)
    for (std::int64_t j = 0; j < d.ny; ++j)
      for (std::int64_t i = 0; i < d.nx; ++i) {
        const auto n = indicator.index(i, j, k);
        const double x = (i + 0.5) * s.x + disp[0][n] - c[0];
        const double y = (j + 0.5) * s.y + disp[1][n] - c[1];
        const double z = (k + 0.5) * s.z + disp[2][n] - c[2];
        const double q = (x * x) / (r[0] * r[0]) + (y * y) / (r[1] * r[1]) + (z * z) / (r[2] * r[2]);
        v[n] = q <= 1.0 ? 1.0f : 0.0f;
      }
  if (spec.smoothing_mm > 0.0) indicator = gaussian_blur(indicator, mm_to_vox(spec.smoothing_mm, s));
  return threshold(indicator, 0.5);
}

bool gt_valid(const BinaryMask& gt) {
  const double occ = static_cast<double>(gt.count()) / static_cast<double>(gt.size());
  if (occ < 0.02 || occ > 0.20) return false;
  return connected_components(gt, Connectivity3D::TwentySix).component_count() == 1;
}

}  // namespace

Phantom generate_phantom(const PhantomSpec& spec, int index) {
  spec.validate();
  if (index < 0) throw InvalidArgument("phantom index must be >= 0");
  const Dims& d = spec.dims;
  const Spacing& s = spec.spacing;
  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    Rng rng = Rng::derive(spec.seed, {static_cast<std::uint64_t>(index), attempt});
    BinaryMask gt = draw_gt(spec, rng);
    if (!gt_valid(gt)) continue;

    VoxelGrid image(d, s, DType::Float32);
    auto v = image.data();
    const auto m = gt.data();
    const double sigma = spec.speckle_sigma;
    for (std::size_t n = 0; n < v.size(); ++n) {
      const double base = m[n] ? spec.intensity_inside : spec.intensity_outside;
      double speckle = 1.0;
      if (sigma > 0.0) speckle = std::exp(std::clamp(sigma * rng.normal(), -3.0 * sigma, 3.0 * sigma));
      v[n] = static_cast<float>(base * speckle);
    }
    if (spec.blur_mm > 0.0) image = gaussian_blur(image, mm_to_vox(spec.blur_mm, s));
    if (spec.shadow) {
      const std::int64_t extent = spec.shadow_axis == 0 ? d.nx : spec.shadow_axis == 1 ? d.ny : d.nz;
      const double depth = rng.uniform(0.3, 0.7) * static_cast<double>(extent);
      auto w = image.data();
      for (std::int64_t k = 0; k < d.nz; ++k)
        for (std::int64_t j = 0; j < d.ny; ++j)
          for (std::int64_t i = 0; i < d.nx; ++i) {
            const double c = static_cast<double>(spec.shadow_axis == 0 ? i : spec.shadow_axis == 1 ? j : k) + 0.5;
            if (c <= depth) continue;
            const double t = std::min(1.0, (c - depth) / (static_cast<double>(extent) - depth));
            w[image.index(i, j, k)] *= static_cast<float>(1.0 - spec.shadow_attenuation * t);
          }
    }
    return {std::move(image), std::move(gt)};
  }
  throw InvalidArgument("phantom " + std::to_string(index) +
                        ": no draw met the single-component 2-20% occupancy requirement in 10 attempts");
}

}  // namespace promptsim
