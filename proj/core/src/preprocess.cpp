#include "promptsim/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace promptsim {
namespace {

std::int64_t output_extent(std::int64_t n, double spacing, double target) {
  const double exact = static_cast<double>(n) * spacing / target;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(exact + 0.5)));
}

struct AxisSample {
  std::int64_t i0 = 0;
  std::int64_t i1 = 0;
  double frac = 0.0;
};

// Maps output voxel `o` to a clamped continuous input coordinate.
AxisSample axis_sample(std::int64_t o, double ratio, std::int64_t n) {
  double x = (static_cast<double>(o) + 0.5) * ratio - 0.5;
  x = std::clamp(x, 0.0, static_cast<double>(n - 1));
  AxisSample s;
  s.i0 = static_cast<std::int64_t>(std::floor(x));
  s.i1 = std::min(s.i0 + 1, n - 1);
  s.frac = x - static_cast<double>(s.i0);
  return s;
}

std::int64_t nearest_index(std::int64_t o, double ratio, std::int64_t n) {
  const double x = (static_cast<double>(o) + 0.5) * ratio - 0.5;
  const auto r = static_cast<std::int64_t>(std::floor(x + 0.5));
  return std::clamp<std::int64_t>(r, 0, n - 1);
}

}  // namespace

VoxelGrid resample_isotropic(const VoxelGrid& grid, double target_mm, Interpolation mode) {
  if (!(target_mm > 0.0) || !std::isfinite(target_mm)) {
    throw InvalidArgument("resample_isotropic: target_mm must be positive");
  }
  const Dims& in = grid.dims();
  const Spacing& sp = grid.spacing();
  const Dims out{output_extent(in.nx, sp.x, target_mm), output_extent(in.ny, sp.y, target_mm),
                 output_extent(in.nz, sp.z, target_mm)};
  const double rx = target_mm / sp.x;
  const double ry = target_mm / sp.y;
  const double rz = target_mm / sp.z;

  const DType dtype = mode == Interpolation::Nearest ? grid.dtype() : DType::Float32;
  VoxelGrid result(out, Spacing{target_mm, target_mm, target_mm}, dtype);

  if (mode == Interpolation::Nearest) {
    for (std::int64_t k = 0; k < out.nz; ++k) {
      const auto sk = nearest_index(k, rz, in.nz);
      for (std::int64_t j = 0; j < out.ny; ++j) {
        const auto sj = nearest_index(j, ry, in.ny);
        for (std::int64_t i = 0; i < out.nx; ++i) {
          result.at(i, j, k) = grid.at(nearest_index(i, rx, in.nx), sj, sk);
        }
      }
    }
    return result;
  }

  std::vector<AxisSample> xs(static_cast<std::size_t>(out.nx));
  for (std::int64_t i = 0; i < out.nx; ++i) xs[static_cast<std::size_t>(i)] = axis_sample(i, rx, in.nx);
  for (std::int64_t k = 0; k < out.nz; ++k) {
    const auto zk = axis_sample(k, rz, in.nz);
    for (std::int64_t j = 0; j < out.ny; ++j) {
      const auto yj = axis_sample(j, ry, in.ny);
      for (std::int64_t i = 0; i < out.nx; ++i) {
        const auto& xi = xs[static_cast<std::size_t>(i)];
        auto lerp_x = [&](std::int64_t jj, std::int64_t kk) {
          const double a = grid.at(xi.i0, jj, kk);
          const double b = grid.at(xi.i1, jj, kk);
          return a + (b - a) * xi.frac;
        };
        const double c00 = lerp_x(yj.i0, zk.i0);
        const double c10 = lerp_x(yj.i1, zk.i0);
        const double c01 = lerp_x(yj.i0, zk.i1);
        const double c11 = lerp_x(yj.i1, zk.i1);
        const double c0 = c00 + (c10 - c00) * yj.frac;
        const double c1 = c01 + (c11 - c01) * yj.frac;
        result.at(i, j, k) = static_cast<float>(c0 + (c1 - c0) * zk.frac);
      }
    }
  }
  return result;
}

BinaryMask resample_isotropic(const BinaryMask& mask, double target_mm) {
  return BinaryMask::from_grid(resample_isotropic(mask.to_grid(), target_mm, Interpolation::Nearest));
}

double percentile_sorted(std::span<const double> sorted, double pct) {
  if (sorted.empty()) throw InvalidArgument("percentile of an empty sequence");
  if (!(pct >= 0.0 && pct <= 100.0)) throw InvalidArgument("percentile must lie in [0, 100]");
  const double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double percentile(std::span<const double> values, double pct) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  return percentile_sorted(sorted, pct);
}

PercentileBounds foreground_percentiles(const VoxelGrid& grid, const BinaryMask& fg, double lo_pct, double hi_pct) {
  require_same_geometry(grid, fg, "clip_percentiles");
  if (lo_pct > hi_pct) throw InvalidArgument("clip_percentiles: lo_pct must not exceed hi_pct");
  std::vector<double> values;
  auto g = grid.data();
  auto m = fg.data();
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (m[n]) values.push_back(g[n]);
  }
  if (values.empty()) throw EmptyMaskError("clip_percentiles: empty foreground");
  std::sort(values.begin(), values.end());
  return {percentile_sorted(values, lo_pct), percentile_sorted(values, hi_pct)};
}

VoxelGrid clip_percentiles(const VoxelGrid& grid, const BinaryMask& fg, double lo_pct, double hi_pct) {
  const auto bounds = foreground_percentiles(grid, fg, lo_pct, hi_pct);
  const auto lo = static_cast<float>(bounds.lo);
  const auto hi = static_cast<float>(bounds.hi);
  VoxelGrid out = grid;
  bool changed = false;
  for (auto& v : out.data()) {
    const float c = std::clamp(v, lo, hi);
    changed = changed || c != v;
    v = c;
  }
  if (changed) out.set_dtype(DType::Float32);
  return out;
}

VoxelGrid zscore_normalize(const VoxelGrid& grid, const BinaryMask& fg) {
  require_same_geometry(grid, fg, "zscore_normalize");
  auto g = grid.data();
  auto m = fg.data();
  double sum = 0.0;
  std::size_t n_fg = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (m[n]) {
      sum += g[n];
      ++n_fg;
    }
  }
  if (n_fg < 2) throw EmptyMaskError("zscore_normalize: foreground needs at least two voxels");
  const double mean = sum / static_cast<double>(n_fg);
  double sq = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (m[n]) sq += (g[n] - mean) * (g[n] - mean);
  }
  const double sd = std::sqrt(sq / static_cast<double>(n_fg));
  if (!(sd > 0.0)) throw InvalidArgument("zscore_normalize: foreground has zero variance");

  VoxelGrid out(grid.dims(), grid.spacing(), DType::Float32);
  auto o = out.data();
  for (std::size_t n = 0; n < g.size(); ++n) o[n] = static_cast<float>((g[n] - mean) / sd);
  return out;
}

BinaryMask foreground_by_intensity(const VoxelGrid& grid, double threshold) {
  BinaryMask m(grid.dims(), grid.spacing());
  auto g = grid.data();
  auto d = m.data();
  for (std::size_t n = 0; n < g.size(); ++n) d[n] = g[n] > threshold ? 1 : 0;
  return m;
}

}  // namespace promptsim
