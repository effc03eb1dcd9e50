#include "promptsim/prompts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "promptsim/morph.hpp"

namespace promptsim {

std::string_view to_string(Polarity p) noexcept { return p == Polarity::Positive ? "positive" : "negative"; }

Polarity parse_polarity(std::string_view s) {
  if (s == "positive" || s == "+") return Polarity::Positive;
  if (s == "negative" || s == "-") return Polarity::Negative;
  throw InvalidArgument("unknown polarity '" + std::string(s) + "'");
}

std::string_view to_string(ScribbleStyle s) noexcept {
  switch (s) {
    case ScribbleStyle::Centerline: return "centerline";
    case ScribbleStyle::WarpedCenterline: return "warped_centerline";
    case ScribbleStyle::Boundary: return "boundary";
    case ScribbleStyle::WarpedBoundary: return "warped_boundary";
  }
  return "centerline";
}

ScribbleStyle parse_scribble_style(std::string_view s) {
  if (s == "centerline") return ScribbleStyle::Centerline;
  if (s == "warped_centerline") return ScribbleStyle::WarpedCenterline;
  if (s == "boundary") return ScribbleStyle::Boundary;
  if (s == "warped_boundary") return ScribbleStyle::WarpedBoundary;
  throw InvalidArgument("unknown scribble style '" + std::string(s) + "'");
}

bool is_warped(ScribbleStyle s) noexcept {
  return s == ScribbleStyle::WarpedCenterline || s == ScribbleStyle::WarpedBoundary;
}
bool is_boundary(ScribbleStyle s) noexcept {
  return s == ScribbleStyle::Boundary || s == ScribbleStyle::WarpedBoundary;
}

std::size_t PromptSet::scribble_voxel_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : scribbles) n += s.voxels.size();
  return n;
}

bool PromptSet::has_negative() const noexcept {
  return std::any_of(points.begin(), points.end(), [](const auto& p) { return p.polarity == Polarity::Negative; }) ||
         std::any_of(scribbles.begin(), scribbles.end(),
                     [](const auto& s) { return s.polarity == Polarity::Negative; });
}

double ScribbleParams::warp_dilation_bound() const noexcept {
  return std::ceil(warp_amplitude_px + 3.0 * thickness_sigma_px);
}

void PromptConfig::validate() const {
  if (points_per_iteration < 0) throw InvalidArgument("points_per_iteration must be >= 0");
  if (slice_frequency < 1) throw InvalidArgument("slice_frequency must be >= 1");
  const auto& s = scribble;
  if (!(s.break_coverage > 0.0 && s.break_coverage <= 1.0)) throw InvalidArgument("break_coverage must lie in (0, 1]");
  if (!(s.break_scale_px > 0.0)) throw InvalidArgument("break_scale_px must be > 0");
  if (!(s.warp_amplitude_px >= 0.0)) throw InvalidArgument("warp_amplitude_px must be >= 0");
  if (!(s.warp_sigma_px > 0.0)) throw InvalidArgument("warp_sigma_px must be > 0");
  if (!(s.thickness_sigma_px > 0.0)) throw InvalidArgument("thickness_sigma_px must be > 0");
  if (!(s.thickness_threshold > 0.0 && s.thickness_threshold < 1.0)) {
    throw InvalidArgument("thickness_threshold must lie in (0, 1)");
  }
  if (!(s.boundary_sigma_px > 0.0)) throw InvalidArgument("boundary_sigma_px must be > 0");
}

// ---------------------------------------------------------------------------
// Points and boxes

namespace {

std::vector<std::size_t> sample_without_replacement(const BinaryMask& region, std::size_t n, Rng& rng) {
  std::vector<std::size_t> pool;
  auto d = region.data();
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d[i]) pool.push_back(i);
  n = std::min(n, pool.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace

std::vector<PointPrompt> sample_points(const BinaryMask& fn_mask, const BinaryMask& fp_mask, std::size_t n_pos,
                                       std::size_t n_neg, Rng& rng) {
  require_same_geometry(fn_mask, fp_mask, "sample_points");
  std::vector<PointPrompt> out;
  for (auto n : sample_without_replacement(fn_mask, n_pos, rng)) out.push_back({fn_mask.coords(n), Polarity::Positive});
  for (auto n : sample_without_replacement(fp_mask, n_neg, rng)) out.push_back({fp_mask.coords(n), Polarity::Negative});
  return out;
}

BoxPrompt ground_truth_box(const BinaryMask& gt) {
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  Index3 lo{kMax, kMax, kMax};
  Index3 hi{-1, -1, -1};
  auto d = gt.data();
  for (std::size_t n = 0; n < d.size(); ++n) {
    if (!d[n]) continue;
    const Index3 v = gt.coords(n);
    lo = {std::min(lo.i, v.i), std::min(lo.j, v.j), std::min(lo.k, v.k)};
    hi = {std::max(hi.i, v.i), std::max(hi.j, v.j), std::max(hi.k, v.k)};
  }
  if (hi.i < 0) throw EmptyMaskError("ground_truth_box: empty ground truth");
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Error regions

BinaryMask filter_small_regions(const BinaryMask& error_mask, std::size_t min_voxels) {
  const auto cc = connected_components(error_mask, Connectivity3D::TwentySix);
  BinaryMask out(error_mask.dims(), error_mask.spacing());
  auto d = out.data();
  for (std::size_t n = 0; n < d.size(); ++n) {
    const auto label = cc.labels[n];
    d[n] = label != 0 && cc.size_of(label) >= min_voxels ? 1 : 0;
  }
  return out;
}

BinaryMask ErrorRegions::kept_mask(const BinaryMask& like) const {
  BinaryMask out(like.dims(), like.spacing());
  std::vector<std::uint8_t> keep(components.component_count() + 1, 0);
  for (auto label : kept) keep[static_cast<std::size_t>(label)] = 1;
  auto d = out.data();
  for (std::size_t n = 0; n < d.size(); ++n) d[n] = keep[static_cast<std::size_t>(components.labels[n])];
  return out;
}

ErrorRegions select_error_regions(const BinaryMask& error_mask, std::size_t min_voxels) {
  ErrorRegions r;
  r.components = connected_components(error_mask, Connectivity3D::TwentySix);
  for (std::size_t k = 0; k < r.components.component_count(); ++k) {
    if (r.components.sizes[k] >= min_voxels) r.kept.push_back(static_cast<std::int32_t>(k + 1));
  }
  if (r.kept.empty() && r.components.component_count() > 0) {
    r.kept.push_back(largest_label(r.components));
    r.fallback = true;
  }
  return r;
}

std::vector<std::int64_t> select_slices(const BinaryMask& region, SliceAxis axis, int frequency) {
  if (frequency < 1) throw InvalidArgument("select_slices: frequency must be >= 1");
  const auto n = slice_count(region.dims(), axis);
  std::vector<std::uint8_t> nonempty(static_cast<std::size_t>(n), 0);
  auto d = region.data();
  for (std::size_t f = 0; f < d.size(); ++f) {
    if (d[f]) nonempty[static_cast<std::size_t>(slice_of(axis, region.coords(f)))] = 1;
  }
  std::vector<std::int64_t> out;
  std::int64_t first = -1;
  for (std::int64_t i = 0; i < n; ++i) {
    if (!nonempty[static_cast<std::size_t>(i)]) continue;
    if (first < 0) first = i;
    if ((i - first) % frequency == 0) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stroke synthesis

namespace {

Binary2D break_stroke(const Binary2D& stroke, const ScribbleParams& p, Rng& rng) {
  if (p.break_coverage >= 1.0) return stroke;
  const Binary2D keep = random_break_mask(stroke.width, stroke.height, rng, p.break_coverage, p.break_scale_px);
  Binary2D out = stroke;
  for (std::size_t n = 0; n < out.pixels.size(); ++n) out.pixels[n] = out.pixels[n] && keep.pixels[n] ? 1 : 0;
  return out;
}

Binary2D warp_and_thicken(const Binary2D& stroke, const ScribbleParams& p, Rng& rng) {
  const auto field = random_deformation_2d(stroke.width, stroke.height, rng, p.warp_amplitude_px, p.warp_sigma_px);
  const Binary2D warped = warp_2d(stroke, field);
  const Scalar2D blurred = gaussian_blur(to_scalar(warped), p.thickness_sigma_px);
  const double peak = *std::max_element(blurred.pixels.begin(), blurred.pixels.end());
  if (!(peak > 0.0)) return Binary2D(stroke.width, stroke.height);
  return threshold(blurred, p.thickness_threshold * peak);
}

}  // namespace

Binary2D centerline_stroke(const Binary2D& region, const ScribbleParams& params, bool warped, Rng& rng) {
  if (count_foreground(region) == 0) return Binary2D(region.width, region.height);
  Binary2D stroke = break_stroke(skeletonize_2d(region), params, rng);
  if (warped && count_foreground(stroke) > 0) stroke = warp_and_thicken(stroke, params, rng);
  return stroke;
}

Binary2D boundary_stroke(const Binary2D& region, const ScribbleParams& params, bool warped, Rng& rng,
                         std::optional<double> forced_threshold) {
  if (count_foreground(region) == 0) return Binary2D(region.width, region.height);
  const Scalar2D blurred = gaussian_blur(to_scalar(region), params.boundary_sigma_px);
  const auto [lo, hi] = std::minmax_element(blurred.pixels.begin(), blurred.pixels.end());
  Binary2D modified = region;
  if (*lo < *hi) {
    const double t = forced_threshold ? *forced_threshold : rng.uniform_open(*lo, *hi);
    modified = threshold(blurred, t);
    // Keep the redrawn outline on the error region itself.
    for (std::size_t n = 0; n < modified.pixels.size(); ++n) {
      modified.pixels[n] = modified.pixels[n] && region.pixels[n] ? 1 : 0;
    }
  }
  Binary2D stroke = break_stroke(boundary_2d(modified), params, rng);
  if (warped && count_foreground(stroke) > 0) stroke = warp_and_thicken(stroke, params, rng);
  return stroke;
}

namespace {

struct Window {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
};

std::optional<Window> foreground_window(const Binary2D& img, int margin) {
  int x0 = img.width, y0 = img.height, x1 = -1, y1 = -1;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return std::nullopt;
  return Window{std::max(0, x0 - margin), std::max(0, y0 - margin), std::min(img.width, x1 + margin + 1),
                std::min(img.height, y1 + margin + 1)};
}

Binary2D crop(const Binary2D& img, const Window& w) {
  Binary2D out(w.x1 - w.x0, w.y1 - w.y0);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out.at(x, y) = img.at(x + w.x0, y + w.y0);
  return out;
}

// Pixels of margin kept around an in-slice region. Wide enough that warped
// strokes cannot reach the window edge and that blurring the region inside
// the window matches blurring the whole slice.
int window_margin(const ScribbleParams& p) {
  const double reach = std::max(p.warp_dilation_bound(), std::ceil(3.0 * p.boundary_sigma_px));
  return static_cast<int>(reach) + 2;
}

std::vector<Scribble> generate_scribbles(const BinaryMask& region, const PromptConfig& cfg, Polarity polarity,
                                         ScribbleStyle style, std::uint64_t rng_seed,
                                         std::vector<std::uint64_t> tags) {
  std::vector<Scribble> out;
  const int margin = window_margin(cfg.scribble);
  tags.push_back(0);
  for (const auto slice : select_slices(region, cfg.slice_axis, cfg.slice_frequency)) {
    const Binary2D plane = extract_slice(region, cfg.slice_axis, slice);
    const auto window = foreground_window(plane, margin);
    if (!window) continue;
    tags.back() = static_cast<std::uint64_t>(slice);
    Rng rng = Rng::derive(rng_seed, std::span<const std::uint64_t>(tags));
    const Binary2D local = crop(plane, *window);
    const Binary2D stroke = is_boundary(style) ? boundary_stroke(local, cfg.scribble, is_warped(style), rng)
                                               : centerline_stroke(local, cfg.scribble, is_warped(style), rng);
    Scribble s;
    s.polarity = polarity;
    s.slice_axis = cfg.slice_axis;
    s.slice_index = slice;
    s.style = style;
    for (int v = 0; v < stroke.height; ++v)
      for (int u = 0; u < stroke.width; ++u)
        if (stroke.at(u, v)) s.voxels.push_back(slice_to_voxel(cfg.slice_axis, slice, u + window->x0, v + window->y0));
    if (s.voxels.empty()) continue;
    std::sort(s.voxels.begin(), s.voxels.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<Scribble> gen_centerline_scribbles(const BinaryMask& region, const PromptConfig& cfg, Polarity polarity,
                                               std::uint64_t rng_seed, std::vector<std::uint64_t> tags) {
  const bool warped = cfg.scribble_style && is_warped(*cfg.scribble_style);
  return generate_scribbles(region, cfg, polarity,
                            warped ? ScribbleStyle::WarpedCenterline : ScribbleStyle::Centerline, rng_seed,
                            std::move(tags));
}

std::vector<Scribble> gen_boundary_scribbles(const BinaryMask& region, const PromptConfig& cfg, Polarity polarity,
                                             std::uint64_t rng_seed, std::vector<std::uint64_t> tags) {
  const bool warped = cfg.scribble_style && is_warped(*cfg.scribble_style);
  return generate_scribbles(region, cfg, polarity, warped ? ScribbleStyle::WarpedBoundary : ScribbleStyle::Boundary,
                            rng_seed, std::move(tags));
}

double prompt_volume_ratio(const std::vector<PromptSet>& sets, const BinaryMask& gt) {
  const auto gt_count = gt.count();
  if (gt_count == 0) throw EmptyMaskError("prompt_volume_ratio: empty ground truth");
  std::size_t voxels = 0;
  for (const auto& s : sets) voxels += s.scribble_voxel_count();
  return static_cast<double>(voxels) / static_cast<double>(gt_count);
}

// ---------------------------------------------------------------------------
// Simulated user

namespace {
// Substream tags.
constexpr std::uint64_t kTagPoints = 1;
constexpr std::uint64_t kTagScribbles = 2;

std::uint64_t polarity_tag(Polarity p) { return p == Polarity::Positive ? 0 : 1; }
}  // namespace

PromptSet build_prompt_set(const BinaryMask& gt, const BinaryMask* pred, const PromptConfig& cfg, int iteration,
                           std::uint64_t seed) {
  cfg.validate();
  if (iteration < 0) throw InvalidArgument("build_prompt_set: iteration must be >= 0");
  if (gt.empty()) throw EmptyMaskError("build_prompt_set: empty ground truth");
  if (pred != nullptr) require_same_geometry(gt, *pred, "build_prompt_set");

  BinaryMask fn = gt;
  BinaryMask fp(gt.dims(), gt.spacing());
  if (iteration > 0 && pred != nullptr) {
    fn = mask_minus(gt, *pred);
    fp = mask_minus(*pred, gt);
  }

  PromptSet set;
  set.iteration = iteration;
  if (iteration == 0 && cfg.use_box) set.box = ground_truth_box(gt);

  const auto iter_tag = static_cast<std::uint64_t>(iteration);
  const ErrorRegions fn_regions = select_error_regions(fn, cfg.min_region_voxels);
  const ErrorRegions fp_regions = select_error_regions(fp, cfg.min_region_voxels);

  if (cfg.use_points && cfg.points_per_iteration > 0) {
    Rng rng = Rng::derive(seed, {iter_tag, kTagPoints});
    const auto n = static_cast<std::size_t>(cfg.points_per_iteration);
    set.points = sample_points(fn_regions.kept_mask(fn), fp_regions.kept_mask(fp), n, n, rng);
  }

  if (cfg.scribble_style) {
    const bool boundary = is_boundary(*cfg.scribble_style);
    for (const auto polarity : {Polarity::Positive, Polarity::Negative}) {
      const ErrorRegions& regions = polarity == Polarity::Positive ? fn_regions : fp_regions;
      const BinaryMask& source = polarity == Polarity::Positive ? fn : fp;
      for (const auto label : regions.kept) {
        const BinaryMask component = component_mask(regions.components, label, source);
        std::vector<std::uint64_t> tags{iter_tag, kTagScribbles, polarity_tag(polarity),
                                        static_cast<std::uint64_t>(label)};
        auto scribbles = boundary ? gen_boundary_scribbles(component, cfg, polarity, seed, std::move(tags))
                                  : gen_centerline_scribbles(component, cfg, polarity, seed, std::move(tags));
        for (auto& s : scribbles) set.scribbles.push_back(std::move(s));
      }
    }
  }
  return set;
}

}  // namespace promptsim
