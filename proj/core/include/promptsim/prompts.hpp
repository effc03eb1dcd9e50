#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "promptsim/components.hpp"
#include "promptsim/rng.hpp"
#include "promptsim/volume.hpp"

namespace promptsim {

enum class Polarity : std::uint8_t { Positive, Negative };
enum class ScribbleStyle : std::uint8_t { Centerline, WarpedCenterline, Boundary, WarpedBoundary };

std::string_view to_string(Polarity p) noexcept;
Polarity parse_polarity(std::string_view s);
std::string_view to_string(ScribbleStyle s) noexcept;
ScribbleStyle parse_scribble_style(std::string_view s);
bool is_warped(ScribbleStyle s) noexcept;
bool is_boundary(ScribbleStyle s) noexcept;

struct PointPrompt {
  Index3 voxel;
  Polarity polarity = Polarity::Positive;

  friend bool operator==(const PointPrompt&, const PointPrompt&) = default;
};

struct BoxPrompt {
  Index3 corner_min;
  Index3 corner_max;

  bool contains(const Index3& v) const noexcept {
    return v.i >= corner_min.i && v.j >= corner_min.j && v.k >= corner_min.k && v.i <= corner_max.i &&
           v.j <= corner_max.j && v.k <= corner_max.k;
  }
  friend bool operator==(const BoxPrompt&, const BoxPrompt&) = default;
};

/// A stroke drawn in one slice; may consist of several fragments.
struct Scribble {
  std::vector<Index3> voxels;  // sorted in scan order, all within the slice
  Polarity polarity = Polarity::Positive;
  SliceAxis slice_axis = SliceAxis::Transverse;
  std::int64_t slice_index = 0;
  ScribbleStyle style = ScribbleStyle::Centerline;

  friend bool operator==(const Scribble&, const Scribble&) = default;
};

struct PromptSet {
  std::vector<PointPrompt> points;
  std::optional<BoxPrompt> box;
  std::vector<Scribble> scribbles;
  int iteration = 0;

  std::size_t scribble_voxel_count() const noexcept;
  bool has_negative() const noexcept;
  bool empty() const noexcept { return points.empty() && !box && scribbles.empty(); }

  friend bool operator==(const PromptSet&, const PromptSet&) = default;
};

/// Stroke synthesis parameters. Lengths are in pixels of the slice.
struct ScribbleParams {
  /// Fraction of the stroke kept by the break mask; 1 disables breaking.
  double break_coverage = 0.5;
  double break_scale_px = 8.0;
  double warp_amplitude_px = 2.5;
  double warp_sigma_px = 6.0;
  /// Post-warp thickening: blur, then keep pixels above
  /// thickness_threshold * (peak of the blurred stroke).
  double thickness_sigma_px = 0.8;
  double thickness_threshold = 0.5;
  /// Blur applied before the random threshold of boundary scribbles.
  double boundary_sigma_px = 2.0;

  /// In-plane radius within which warped strokes stay around their source
  /// region: ceil(warp_amplitude_px + 3 * thickness_sigma_px).
  double warp_dilation_bound() const noexcept;
};

struct PromptConfig {
  bool use_points = true;
  int points_per_iteration = 1;
  bool use_box = false;
  std::optional<ScribbleStyle> scribble_style;
  SliceAxis slice_axis = SliceAxis::Transverse;
  int slice_frequency = 1;
  std::size_t min_region_voxels = 100;
  ScribbleParams scribble;

  void validate() const;
};

/// Uniform sampling without replacement from each region; counts are clamped
/// to the region sizes. Positive points come from `fn_mask`, negative from
/// `fp_mask`.
std::vector<PointPrompt> sample_points(const BinaryMask& fn_mask, const BinaryMask& fp_mask, std::size_t n_pos,
                                       std::size_t n_neg, Rng& rng);

/// Tight axis-aligned bounding box of the foreground. Throws on empty gt.
BoxPrompt ground_truth_box(const BinaryMask& gt);

/// Drops 26-connected components smaller than `min_voxels`.
BinaryMask filter_small_regions(const BinaryMask& error_mask, std::size_t min_voxels = 100);

/// Components of an error mask that survive the size filter. When filtering
/// would remove every component of a nonempty mask, the largest one is kept
/// (`fallback` is set).
struct ErrorRegions {
  ComponentLabels components;
  std::vector<std::int32_t> kept;
  bool fallback = false;

  BinaryMask kept_mask(const BinaryMask& like) const;
};

ErrorRegions select_error_regions(const BinaryMask& error_mask, std::size_t min_voxels);

/// Nonempty slices i of `region` along `axis` with (i - i0) % frequency == 0,
/// i0 being the first nonempty slice. Strictly increasing.
std::vector<std::int64_t> select_slices(const BinaryMask& region, SliceAxis axis, int frequency);

/// One scribble per selected slice of `region` whose stroke is nonempty.
/// `rng_seed` and `tags` seed per-slice substreams derive(rng_seed, tags..., slice).
std::vector<Scribble> gen_centerline_scribbles(const BinaryMask& region, const PromptConfig& cfg, Polarity polarity,
                                               std::uint64_t rng_seed, std::vector<std::uint64_t> tags = {});
std::vector<Scribble> gen_boundary_scribbles(const BinaryMask& region, const PromptConfig& cfg, Polarity polarity,
                                             std::uint64_t rng_seed, std::vector<std::uint64_t> tags = {});

/// Single-slice stroke pipelines, exposed for tests and inspection dumps.
/// `region` is the in-slice region; the returned image has the same shape.
Binary2D centerline_stroke(const Binary2D& region, const ScribbleParams& params, bool warped, Rng& rng);
/// `forced_threshold`, when set, replaces the random level drawn on the
/// blurred region.
Binary2D boundary_stroke(const Binary2D& region, const ScribbleParams& params, bool warped, Rng& rng,
                         std::optional<double> forced_threshold = std::nullopt);

/// Total scribble voxels across the sets divided by |gt|.
double prompt_volume_ratio(const std::vector<PromptSet>& sets, const BinaryMask& gt);

/// Simulated user for one iteration. FN = gt & !pred, FP = pred & !gt
/// (iteration 0 ignores `pred`: FN = gt, FP empty). Both are reduced with
/// select_error_regions; points and scribbles are positive from FN and
/// negative from FP. The box is emitted only at iteration 0 when enabled.
/// All randomness derives from `seed` and the iteration number.
PromptSet build_prompt_set(const BinaryMask& gt, const BinaryMask* pred, const PromptConfig& cfg, int iteration,
                           std::uint64_t seed);

}  // namespace promptsim
