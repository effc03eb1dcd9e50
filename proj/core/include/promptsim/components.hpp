#pragma once

#include <cstdint>
#include <vector>

#include "promptsim/volume.hpp"

namespace promptsim {

enum class Connectivity3D : std::uint8_t { Six = 6, TwentySix = 26 };
enum class Connectivity2D : std::uint8_t { Four = 4, Eight = 8 };

/// Labels 1..K in first-encounter (flat index) scan order; 0 is background.
struct ComponentLabels {
  Dims dims;
  std::vector<std::int32_t> labels;
  /// sizes[k - 1] is the voxel count of label k.
  std::vector<std::size_t> sizes;

  std::size_t component_count() const noexcept { return sizes.size(); }
  std::size_t size_of(std::int32_t label) const { return sizes.at(static_cast<std::size_t>(label - 1)); }
};

ComponentLabels connected_components(const BinaryMask& mask, Connectivity3D connectivity);

/// Voxels carrying `label`, with the geometry of `like`.
BinaryMask component_mask(const ComponentLabels& cc, std::int32_t label, const BinaryMask& like);

/// Label of the largest component (ties: lowest label); 0 when there is none.
std::int32_t largest_label(const ComponentLabels& cc) noexcept;

struct ComponentLabels2D {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> labels;
  std::vector<std::size_t> sizes;

  std::size_t component_count() const noexcept { return sizes.size(); }
};

ComponentLabels2D connected_components_2d(const Binary2D& img, Connectivity2D connectivity);

}  // namespace promptsim
