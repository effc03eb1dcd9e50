#include "promptsim/components.hpp"

#include <array>

namespace promptsim {

ComponentLabels connected_components(const BinaryMask& mask, Connectivity3D connectivity) {
  const Dims& d = mask.dims();
  ComponentLabels cc;
  cc.dims = d;
  cc.labels.assign(mask.size(), 0);

  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (connectivity == Connectivity3D::Six && manhattan != 1) continue;
        offsets.push_back({dx, dy, dz});
      }

  auto data = mask.data();
  std::vector<std::size_t> stack;
  std::int32_t next = 0;
  for (std::size_t start = 0; start < data.size(); ++start) {
    if (!data[start] || cc.labels[start] != 0) continue;
    const std::int32_t label = ++next;
    std::size_t size = 0;
    cc.labels[start] = label;
    stack.push_back(start);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++size;
      const Index3 v = mask.coords(cur);
      for (const auto& o : offsets) {
        const std::int64_t i = v.i + o[0], j = v.j + o[1], k = v.k + o[2];
        if (!d.contains(i, j, k)) continue;
        const std::size_t n = mask.index(i, j, k);
        if (data[n] && cc.labels[n] == 0) {
          cc.labels[n] = label;
          stack.push_back(n);
        }
      }
    }
    cc.sizes.push_back(size);
  }
  return cc;
}

BinaryMask component_mask(const ComponentLabels& cc, std::int32_t label, const BinaryMask& like) {
  BinaryMask out(like.dims(), like.spacing());
  auto d = out.data();
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = cc.labels[n] == label ? 1 : 0;
  return out;
}

std::int32_t largest_label(const ComponentLabels& cc) noexcept {
  std::int32_t best = 0;
  std::size_t best_size = 0;
  for (std::size_t k = 0; k < cc.sizes.size(); ++k) {
    if (cc.sizes[k] > best_size) {
      best_size = cc.sizes[k];
      best = static_cast<std::int32_t>(k + 1);
    }
  }
  return best;
}

ComponentLabels2D connected_components_2d(const Binary2D& img, Connectivity2D connectivity) {
  ComponentLabels2D cc;
  cc.width = img.width;
  cc.height = img.height;
  cc.labels.assign(img.pixels.size(), 0);
  const bool eight = connectivity == Connectivity2D::Eight;

  std::vector<std::pair<int, int>> stack;
  std::int32_t next = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!img.at(x, y) || cc.labels[img.index(x, y)] != 0) continue;
      const std::int32_t label = ++next;
      std::size_t size = 0;
      cc.labels[img.index(x, y)] = label;
      stack.emplace_back(x, y);
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++size;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (!eight && dx != 0 && dy != 0) continue;
            const int nx = cx + dx, ny = cy + dy;
            if (!img.contains(nx, ny)) continue;
            const auto n = img.index(nx, ny);
            if (img.pixels[n] && cc.labels[n] == 0) {
              cc.labels[n] = label;
              stack.emplace_back(nx, ny);
            }
          }
        }
      }
      cc.sizes.push_back(size);
    }
  }
  return cc;
}

}  // namespace promptsim
