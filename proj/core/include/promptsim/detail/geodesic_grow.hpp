#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <vector>

namespace promptsim {

template <typename Passable>
BinaryMask geodesic_grow(const Dims& dims, const Spacing& spacing, const std::vector<Index3>& seeds,
                         double max_geodesic_mm, Passable&& passable) {
  BinaryMask out(dims, spacing);
  std::vector<double> dist(dims.voxel_count(), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (const auto& s : seeds) {
    if (!dims.contains(s.i, s.j, s.k)) continue;
    const auto n = out.index(s.i, s.j, s.k);
    if (!passable(n) || dist[n] == 0.0) continue;
    dist[n] = 0.0;
    queue.emplace(0.0, n);
  }
  // Small slack so sums of spacings that equal the cap are not lost to rounding.
  const double cap = max_geodesic_mm * (1.0 + 1e-12);
  while (!queue.empty()) {
    const auto [d, n] = queue.top();
    queue.pop();
    if (d > dist[n]) continue;
    out.data()[n] = 1;
    const Index3 v = out.coords(n);
    const std::int64_t step[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    const double len[6] = {spacing.x, spacing.x, spacing.y, spacing.y, spacing.z, spacing.z};
    for (int s = 0; s < 6; ++s) {
      const std::int64_t i = v.i + step[s][0], j = v.j + step[s][1], k = v.k + step[s][2];
      if (!dims.contains(i, j, k)) continue;
      const auto m = out.index(i, j, k);
      const double nd = d + len[s];
      if (nd > cap || nd >= dist[m] || !passable(m)) continue;
      dist[m] = nd;
      queue.emplace(nd, m);
    }
  }
  return out;
}

}  // namespace promptsim
