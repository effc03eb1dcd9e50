#include "promptsim/edt.hpp"

#include <cmath>
#include <limits>

namespace promptsim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared-distance transform of sampled function f with
// sample positions p * step:  d(q) = min_p f(p) + (step * (q - p))^2.
class EnvelopePass {
 public:
  void run(std::vector<double>& f, std::int64_t n, double step) {
    if (static_cast<std::int64_t>(v_.size()) < n) {
      v_.resize(static_cast<std::size_t>(n));
      z_.resize(static_cast<std::size_t>(n) + 1);
      d_.resize(static_cast<std::size_t>(n));
    }
    auto pos = [step](std::int64_t q) { return step * static_cast<double>(q); };

    std::int64_t k = -1;
    for (std::int64_t q = 0; q < n; ++q) {
      const double fq = f[static_cast<std::size_t>(q)];
      if (fq == kInf) continue;
      const double xq = pos(q);
      while (k >= 0) {
        const std::int64_t p = v_[static_cast<std::size_t>(k)];
        const double xp = pos(p);
        const double s = ((fq + xq * xq) - (f[static_cast<std::size_t>(p)] + xp * xp)) / (2.0 * (xq - xp));
        if (s <= z_[static_cast<std::size_t>(k)]) {
          --k;
        } else {
          break;
        }
      }
      ++k;
      v_[static_cast<std::size_t>(k)] = q;
      if (k == 0) {
        z_[0] = -kInf;
      } else {
        const std::int64_t p = v_[static_cast<std::size_t>(k - 1)];
        const double xp = pos(p);
        z_[static_cast<std::size_t>(k)] =
            ((fq + xq * xq) - (f[static_cast<std::size_t>(p)] + xp * xp)) / (2.0 * (xq - xp));
      }
      z_[static_cast<std::size_t>(k) + 1] = kInf;
    }
    if (k < 0) return;  // whole line infinite

    std::int64_t j = 0;
    for (std::int64_t q = 0; q < n; ++q) {
      const double xq = pos(q);
      while (z_[static_cast<std::size_t>(j) + 1] < xq) ++j;
      const std::int64_t p = v_[static_cast<std::size_t>(j)];
      const double diff = xq - pos(p);
      d_[static_cast<std::size_t>(q)] = f[static_cast<std::size_t>(p)] + diff * diff;
    }
    for (std::int64_t q = 0; q < n; ++q) f[static_cast<std::size_t>(q)] = d_[static_cast<std::size_t>(q)];
  }

 private:
  std::vector<std::int64_t> v_;
  std::vector<double> z_;
  std::vector<double> d_;
};

}  // namespace

DistanceMap squared_edt_3d(const BinaryMask& mask) {
  const Dims& d = mask.dims();
  const Spacing& s = mask.spacing();
  DistanceMap out{d, s, std::vector<double>(mask.size(), kInf)};
  auto data = mask.data();
  bool any = false;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (data[n]) {
      out.values[n] = 0.0;
      any = true;
    }
  }
  if (!any) throw EmptyMaskError("edt_3d: empty mask");

  EnvelopePass pass;
  std::vector<double> line;
  auto sweep = [&](std::int64_t n, std::int64_t stride, double step, std::int64_t count, auto base) {
    line.resize(static_cast<std::size_t>(n));
    for (std::int64_t l = 0; l < count; ++l) {
      const std::int64_t b = base(l);
      for (std::int64_t m = 0; m < n; ++m) line[static_cast<std::size_t>(m)] = out.values[static_cast<std::size_t>(b + m * stride)];
      pass.run(line, n, step);
      for (std::int64_t m = 0; m < n; ++m) out.values[static_cast<std::size_t>(b + m * stride)] = line[static_cast<std::size_t>(m)];
    }
  };
  const std::int64_t nx = d.nx, ny = d.ny, nz = d.nz;
  sweep(nx, 1, s.x, ny * nz, [nx](std::int64_t l) { return l * nx; });
  sweep(ny, nx, s.y, nx * nz, [nx, ny](std::int64_t l) { return (l / nx) * nx * ny + (l % nx); });
  sweep(nz, nx * ny, s.z, nx * ny, [](std::int64_t l) { return l; });
  return out;
}

DistanceMap edt_3d(const BinaryMask& mask) {
  DistanceMap out = squared_edt_3d(mask);
  for (auto& v : out.values) v = std::sqrt(v);
  return out;
}

}  // namespace promptsim
