#include "promptsim/metrics.hpp"

#include <algorithm>

#include "promptsim/edt.hpp"
#include "promptsim/morph.hpp"
#include "promptsim/preprocess.hpp"

namespace promptsim {

SurfaceDistances surface_distances(const BinaryMask& a, const BinaryMask& b) {
  require_same_geometry(a, b, "surface distances");
  if (a.empty() || b.empty()) throw EmptyMaskError("surface metrics are undefined for an empty mask");
  const auto sa = surface_voxels_3d(a);
  const auto sb = surface_voxels_3d(b);
  BinaryMask surf_a(a.dims(), a.spacing());
  BinaryMask surf_b(b.dims(), b.spacing());
  for (auto n : sa) surf_a.data()[n] = 1;
  for (auto n : sb) surf_b.data()[n] = 1;
  const DistanceMap to_a = edt_3d(surf_a);
  const DistanceMap to_b = edt_3d(surf_b);

  SurfaceDistances d;
  d.a_to_b.reserve(sa.size());
  d.b_to_a.reserve(sb.size());
  for (auto n : sa) d.a_to_b.push_back(to_b.values[n]);
  for (auto n : sb) d.b_to_a.push_back(to_a.values[n]);
  return d;
}

double dice(const BinaryMask& a, const BinaryMask& b) {
  require_same_geometry(a, b, "dice");
  auto da = a.data();
  auto db = b.data();
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t n = 0; n < da.size(); ++n) {
    na += da[n];
    nb += db[n];
    both += da[n] & db[n];
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

double nsd(const SurfaceDistances& d, double tolerance_mm) {
  auto within = [tolerance_mm](double x) { return x <= tolerance_mm; };
  const auto hits = std::count_if(d.a_to_b.begin(), d.a_to_b.end(), within) +
                    std::count_if(d.b_to_a.begin(), d.b_to_a.end(), within);
  return static_cast<double>(hits) / static_cast<double>(d.a_to_b.size() + d.b_to_a.size());
}

double asd(const SurfaceDistances& d) {
  double sum = 0.0;
  for (double x : d.a_to_b) sum += x;
  for (double x : d.b_to_a) sum += x;
  return sum / static_cast<double>(d.a_to_b.size() + d.b_to_a.size());
}

double hd95(const SurfaceDistances& d) {
  return std::max(percentile(d.a_to_b, 95.0), percentile(d.b_to_a, 95.0));
}

double nsd(const BinaryMask& a, const BinaryMask& b, double tolerance_mm) {
  return nsd(surface_distances(a, b), tolerance_mm);
}
double asd(const BinaryMask& a, const BinaryMask& b) { return asd(surface_distances(a, b)); }
double hd95(const BinaryMask& a, const BinaryMask& b) { return hd95(surface_distances(a, b)); }

double hausdorff(const BinaryMask& a, const BinaryMask& b) {
  const auto d = surface_distances(a, b);
  return std::max(*std::max_element(d.a_to_b.begin(), d.a_to_b.end()),
                  *std::max_element(d.b_to_a.begin(), d.b_to_a.end()));
}

MetricValues score(const BinaryMask& a, const BinaryMask& b, double tolerance_mm) {
  MetricValues v;
  v.dice = dice(a, b);
  const auto d = surface_distances(a, b);
  v.nsd = nsd(d, tolerance_mm);
  v.asd_mm = asd(d);
  v.hd95_mm = hd95(d);
  return v;
}

BinaryMask restrict_to_slices(const BinaryMask& mask, const AnnotatedSlices& slices) {
  const Dims& d = mask.dims();
  const auto n = static_cast<std::int64_t>(slices.indices.size());
  if (n == 0) throw InvalidArgument("restrict_to_slices: no slices given");
  const bool transverse = slices.axis == SliceAxis::Transverse;
  const Dims out_dims = transverse ? Dims{d.nx, d.ny, n} : Dims{n, d.ny, d.nz};
  BinaryMask out(out_dims, mask.spacing());
  for (std::int64_t s = 0; s < n; ++s) {
    insert_slice(out, extract_slice(mask, slices.axis, slices.indices[static_cast<std::size_t>(s)]), slices.axis, s);
  }
  return out;
}

MetricsReport report(const BinaryMask& a, const BinaryMask& b, const std::optional<AnnotatedSlices>& slices,
                     double tolerance_mm) {
  MetricsReport r;
  r.whole = score(a, b, tolerance_mm);
  if (slices && !slices->indices.empty()) {
    r.annotated = score(restrict_to_slices(a, *slices), restrict_to_slices(b, *slices), tolerance_mm);
  }
  return r;
}

}  // namespace promptsim
