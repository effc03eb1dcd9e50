#include "promptsim/morph.hpp"

#include <algorithm>
#include <cmath>

#include "promptsim/components.hpp"
#include "promptsim/preprocess.hpp"

namespace promptsim {

// ---------------------------------------------------------------------------
// Thinning

namespace {

std::uint8_t px(const Binary2D& img, int x, int y) {
  return img.contains(x, y) ? (img.at(x, y) ? 1 : 0) : 0;
}

// Zhang-Suen deletion test for sub-iteration `step` (0 or 1).
bool zs_deletable(const Binary2D& img, int x, int y, int step) {
  const std::uint8_t p2 = px(img, x, y - 1), p3 = px(img, x + 1, y - 1), p4 = px(img, x + 1, y),
                     p5 = px(img, x + 1, y + 1), p6 = px(img, x, y + 1), p7 = px(img, x - 1, y + 1),
                     p8 = px(img, x - 1, y), p9 = px(img, x - 1, y - 1);
  const std::uint8_t ring[9] = {p2, p3, p4, p5, p6, p7, p8, p9, p2};
  int b = 0;
  int a = 0;
  for (int n = 0; n < 8; ++n) {
    b += ring[n];
    if (ring[n] == 0 && ring[n + 1] == 1) ++a;
  }
  if (b < 2 || b > 6 || a != 1) return false;
  if (step == 0) return (p2 * p4 * p6) == 0 && (p4 * p6 * p8) == 0;
  return (p2 * p4 * p8) == 0 && (p2 * p6 * p8) == 0;
}

}  // namespace

Binary2D skeletonize_2d(const Binary2D& img) {
  Binary2D out = img;
  for (auto& p : out.pixels) p = p ? 1 : 0;

  // Sub-iteration number (1-based) at which each pixel was removed.
  std::vector<int> removed_at(out.pixels.size(), 0);
  std::vector<std::pair<int, int>> live;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      if (out.at(x, y)) live.emplace_back(x, y);

  int sub_iteration = 0;
  std::vector<std::pair<int, int>> doomed;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int step = 0; step < 2; ++step) {
      ++sub_iteration;
      doomed.clear();
      for (const auto& [x, y] : live) {
        if (zs_deletable(out, x, y, step)) doomed.emplace_back(x, y);
      }
      if (doomed.empty()) continue;
      changed = true;
      for (const auto& [x, y] : doomed) {
        out.at(x, y) = 0;
        removed_at[out.index(x, y)] = sub_iteration;
      }
      std::erase_if(live, [&](const auto& p) { return out.at(p.first, p.second) == 0; });
    }
  }

  const auto cc = connected_components_2d(img, Connectivity2D::Eight);
  const auto k = cc.component_count();
  std::vector<std::uint8_t> survives(k + 1, 0);
  std::vector<int> last_step(k + 1, 0);
  for (std::size_t n = 0; n < out.pixels.size(); ++n) {
    const auto label = static_cast<std::size_t>(cc.labels[n]);
    if (label == 0) continue;
    if (out.pixels[n]) survives[label] = 1;
    last_step[label] = std::max(last_step[label], removed_at[n]);
  }
  for (std::size_t n = 0; n < out.pixels.size(); ++n) {
    const auto label = static_cast<std::size_t>(cc.labels[n]);
    if (label != 0 && !survives[label] && removed_at[n] == last_step[label]) out.pixels[n] = 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian filtering

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("gaussian sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * (k * k) / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (auto& w : taps) w /= sum;
  return taps;
}

namespace {

// Half-sample symmetric reflection into [0, n).
std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Convolves `count` lines of length `n`; element m of line l sits at
// base(l) + m * stride.
template <typename Base>
void convolve_lines(std::vector<double>& buf, std::int64_t n, std::int64_t stride, std::int64_t count, Base base,
                    const std::vector<double>& taps) {
  const auto radius = static_cast<std::int64_t>(taps.size() / 2);
  std::vector<double> line(static_cast<std::size_t>(n));
  std::vector<double> padded(static_cast<std::size_t>(n + 2 * radius));
  for (std::int64_t l = 0; l < count; ++l) {
    const std::int64_t b = base(l);
    for (std::int64_t m = -radius; m < n + radius; ++m) {
      padded[static_cast<std::size_t>(m + radius)] = buf[static_cast<std::size_t>(b + reflect_index(m, n) * stride)];
    }
    for (std::int64_t m = 0; m < n; ++m) {
      double acc = 0.0;
      const double* src = &padded[static_cast<std::size_t>(m)];
      for (std::size_t t = 0; t < taps.size(); ++t) acc += taps[t] * src[t];
      line[static_cast<std::size_t>(m)] = acc;
    }
    for (std::int64_t m = 0; m < n; ++m) buf[static_cast<std::size_t>(b + m * stride)] = line[static_cast<std::size_t>(m)];
  }
}

}  // namespace

Scalar2D gaussian_blur(const Scalar2D& img, double sigma_x, double sigma_y) {
  const auto kx = gaussian_kernel(sigma_x);
  const auto ky = gaussian_kernel(sigma_y);
  Scalar2D out = img;
  const std::int64_t w = img.width, h = img.height;
  if (w == 0 || h == 0) return out;
  convolve_lines(out.pixels, w, 1, h, [w](std::int64_t y) { return y * w; }, kx);
  convolve_lines(out.pixels, h, w, w, [](std::int64_t x) { return x; }, ky);
  return out;
}

Scalar2D gaussian_blur(const Scalar2D& img, double sigma) { return gaussian_blur(img, sigma, sigma); }

VoxelGrid gaussian_blur(const VoxelGrid& grid, const std::array<double, 3>& sigma_vox) {
  const Dims& d = grid.dims();
  std::vector<double> buf(grid.data().begin(), grid.data().end());
  const std::int64_t nx = d.nx, ny = d.ny, nz = d.nz;
  convolve_lines(buf, nx, 1, ny * nz, [nx](std::int64_t l) { return l * nx; }, gaussian_kernel(sigma_vox[0]));
  convolve_lines(
      buf, ny, nx, nx * nz,
      [nx, ny](std::int64_t l) { return (l / nx) * nx * ny + (l % nx); }, gaussian_kernel(sigma_vox[1]));
  convolve_lines(buf, nz, nx * ny, nx * ny, [](std::int64_t l) { return l; }, gaussian_kernel(sigma_vox[2]));
  std::vector<float> values(buf.size());
  for (std::size_t n = 0; n < buf.size(); ++n) values[n] = static_cast<float>(buf[n]);
  return VoxelGrid(d, grid.spacing(), DType::Float32, std::move(values));
}

Scalar2D to_scalar(const Binary2D& img) {
  Scalar2D out(img.width, img.height);
  for (std::size_t n = 0; n < img.pixels.size(); ++n) out.pixels[n] = img.pixels[n] ? 1.0 : 0.0;
  return out;
}

Binary2D threshold(const Scalar2D& img, double t) {
  Binary2D out(img.width, img.height);
  for (std::size_t n = 0; n < img.pixels.size(); ++n) out.pixels[n] = img.pixels[n] > t ? 1 : 0;
  return out;
}

BinaryMask threshold(const VoxelGrid& grid, double t) { return foreground_by_intensity(grid, t); }

// ---------------------------------------------------------------------------
// Boundaries and surfaces

Binary2D boundary_2d(const Binary2D& img) {
  Binary2D out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.at(x, y)) continue;
      const bool edge = !px(img, x - 1, y) || !px(img, x + 1, y) || !px(img, x, y - 1) || !px(img, x, y + 1);
      out.at(x, y) = edge ? 1 : 0;
    }
  }
  return out;
}

std::vector<std::size_t> surface_voxels_3d(const BinaryMask& mask) {
  const Dims& d = mask.dims();
  std::vector<std::size_t> out;
  auto data = mask.data();
  auto fg = [&](std::int64_t i, std::int64_t j, std::int64_t k) { return d.contains(i, j, k) && mask.at(i, j, k); };
  for (std::int64_t k = 0; k < d.nz; ++k) {
    for (std::int64_t j = 0; j < d.ny; ++j) {
      for (std::int64_t i = 0; i < d.nx; ++i) {
        const std::size_t n = mask.index(i, j, k);
        if (!data[n]) continue;
        if (!fg(i - 1, j, k) || !fg(i + 1, j, k) || !fg(i, j - 1, k) || !fg(i, j + 1, k) || !fg(i, j, k - 1) ||
            !fg(i, j, k + 1)) {
          out.push_back(n);
        }
      }
    }
  }
  if (out.empty()) throw EmptyMaskError("surface_voxels_3d: empty mask");
  return out;
}

BinaryMask surface_mask_3d(const BinaryMask& mask) {
  BinaryMask out(mask.dims(), mask.spacing());
  for (std::size_t n : surface_voxels_3d(mask)) out.data()[n] = 1;
  return out;
}

// ---------------------------------------------------------------------------
// Random deformation and break masks

double DeformationField2D::max_magnitude() const noexcept {
  double m = 0.0;
  for (std::size_t n = 0; n < dx.size(); ++n) m = std::max(m, std::hypot(dx[n], dy[n]));
  return m;
}

DeformationField2D random_deformation_2d(int width, int height, Rng& rng, double amplitude_px,
                                         double smooth_sigma_px) {
  if (!(amplitude_px >= 0.0)) throw InvalidArgument("deformation amplitude must be >= 0");
  if (!(smooth_sigma_px > 0.0)) throw InvalidArgument("deformation smoothing sigma must be > 0");
  DeformationField2D field(width, height);
  if (amplitude_px == 0.0 || field.dx.empty()) return field;

  Scalar2D nx(width, height), ny(width, height);
  for (auto& v : nx.pixels) v = rng.normal();
  for (auto& v : ny.pixels) v = rng.normal();
  nx = gaussian_blur(nx, smooth_sigma_px);
  ny = gaussian_blur(ny, smooth_sigma_px);
  field.dx = std::move(nx.pixels);
  field.dy = std::move(ny.pixels);

  const double peak = field.max_magnitude();
  if (peak > 0.0) {
    const double scale = amplitude_px / peak;
    for (auto& v : field.dx) v *= scale;
    for (auto& v : field.dy) v *= scale;
  }
  return field;
}

Binary2D warp_2d(const Binary2D& img, const DeformationField2D& field) {
  if (field.width != img.width || field.height != img.height) {
    throw GeometryMismatch("warp_2d: field shape does not match image");
  }
  Binary2D out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto n = img.index(x, y);
      const int sx = static_cast<int>(std::floor(x + field.dx[n] + 0.5));
      const int sy = static_cast<int>(std::floor(y + field.dy[n] + 0.5));
      out.pixels[n] = img.contains(sx, sy) && img.at(sx, sy) ? 1 : 0;
    }
  }
  return out;
}

Binary2D random_break_mask(int width, int height, Rng& rng, double coverage, double scale_px) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw InvalidArgument("break-mask coverage must lie in (0, 1)");
  Scalar2D noise(width, height);
  for (auto& v : noise.pixels) v = rng.normal();
  noise = gaussian_blur(noise, scale_px);
  if (noise.pixels.empty()) return Binary2D(width, height);
  const double cut = percentile(noise.pixels, 100.0 * (1.0 - coverage));
  return threshold(noise, cut);
}

Binary2D dilate_disk(const Binary2D& img, double radius) {
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  Binary2D out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.at(x, y)) continue;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          if (dx * dx + dy * dy > r2 || !img.contains(x + dx, y + dy)) continue;
          out.at(x + dx, y + dy) = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace promptsim
