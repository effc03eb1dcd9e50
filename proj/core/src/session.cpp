#include "promptsim/session.hpp"

#include <chrono>
#include <cmath>
#include <set>

namespace promptsim {

void SessionConfig::validate() const {
  prompts.validate();
  if (iterations < 1) throw InvalidArgument("iterations must be >= 1");
  if (!(success_dice > 0.0 && success_dice <= 1.0)) throw InvalidArgument("success_dice must be in (0, 1]");
  if (!(nsd_tolerance_mm >= 0.0)) throw InvalidArgument("nsd tolerance must be >= 0");
}

PromptSummary PromptSummary::of(const PromptSet& set) {
  PromptSummary s;
  for (const auto& p : set.points) (p.polarity == Polarity::Positive ? s.points_positive : s.points_negative)++;
  s.boxes = set.box ? 1 : 0;
  for (const auto& sc : set.scribbles) {
    (sc.polarity == Polarity::Positive ? s.scribbles_positive : s.scribbles_negative)++;
    s.scribble_voxels += sc.voxels.size();
  }
  return s;
}

std::string_view to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::Iterations: return "iterations";
    case StopReason::Converged: return "converged";
    case StopReason::EarlyStop: return "early_stop";
    case StopReason::Failed: return "failed";
  }
  return "iterations";
}

StopReason parse_stop_reason(std::string_view s) {
  if (s == "iterations") return StopReason::Iterations;
  if (s == "converged") return StopReason::Converged;
  if (s == "early_stop") return StopReason::EarlyStop;
  if (s == "failed") return StopReason::Failed;
  throw InvalidArgument("unknown stop reason '" + std::string(s) + "'");
}

MetricValues score_total(const BinaryMask& pred, const BinaryMask& gt, double tolerance_mm) {
  require_same_geometry(pred, gt, "score");
  const bool pe = pred.empty();
  const bool ge = gt.empty();
  if (pe && ge) return {1.0, 1.0, 0.0, 0.0};
  if (pe || ge) {
    const Dims& d = gt.dims();
    const Spacing& s = gt.spacing();
    const double diag = std::hypot(d.nx * s.x, d.ny * s.y, d.nz * s.z);
    return {0.0, 0.0, diag, diag};
  }
  return score(pred, gt, tolerance_mm);
}

MetricsReport report_total(const BinaryMask& pred, const BinaryMask& gt, const std::optional<AnnotatedSlices>& slices,
                           double tolerance_mm) {
  MetricsReport r;
  r.whole = score_total(pred, gt, tolerance_mm);
  if (slices && !slices->indices.empty()) {
    r.annotated = score_total(restrict_to_slices(pred, *slices), restrict_to_slices(gt, *slices), tolerance_mm);
  }
  return r;
}

SessionRecord run_session(std::shared_ptr<const VoxelGrid> image, const BinaryMask& gt, Segmenter& backend,
                          const SessionConfig& cfg, std::uint64_t seed, const std::string& subject_id,
                          const std::string& config_hash, SessionObserver* observer) {
  cfg.validate();
  if (!image) throw InvalidArgument("session needs an image");
  require_same_geometry(*image, gt, "session");

  SessionRecord rec;
  rec.subject_id = subject_id;
  rec.config_hash = config_hash;
  rec.seed = seed;

  const bool annotate = cfg.prompts.slice_frequency > 1;
  std::set<std::int64_t> annotated;
  std::optional<BinaryMask> pred;
  double best = 0.0;
  const double gt_voxels = static_cast<double>(std::max<std::size_t>(gt.count(), 1));

  try {
    for (int k = 0; k < cfg.iterations; ++k) {
      if (pred && *pred == gt) {
        rec.stop_reason = StopReason::Converged;
        break;
      }
      PromptSet prompts = build_prompt_set(gt, pred ? &*pred : nullptr, cfg.prompts, k, seed);
      for (const auto& s : prompts.scribbles) {
        if (s.slice_axis == cfg.prompts.slice_axis) annotated.insert(s.slice_index);
      }

      SegmentationRequest req;
      req.image = image;
      req.prompts = prompts;
      req.previous_mask = pred;
      req.session_id = subject_id;
      req.iteration = k;

      IterationRecord it;
      it.iteration = k;
      it.prompts = PromptSummary::of(prompts);
      it.prompt_ratio = static_cast<double>(it.prompts.scribble_voxels) / gt_voxels;

      const auto t0 = std::chrono::steady_clock::now();
      BinaryMask out = backend.segment(req);
      it.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      check_result_geometry(req, out);

      std::optional<AnnotatedSlices> slices;
      if (annotate) slices = AnnotatedSlices{cfg.prompts.slice_axis, {annotated.begin(), annotated.end()}};
      it.metrics = report_total(out, gt, slices, cfg.nsd_tolerance_mm);
      best = std::max(best, it.metrics.whole.dice);
      rec.iterations.push_back(it);
      if (observer) observer->on_iteration(k, prompts, out);
      pred = std::move(out);

      if (cfg.early_stop && it.metrics.whole.dice >= cfg.success_dice) {
        rec.stop_reason = StopReason::EarlyStop;
        break;
      }
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.stop_reason = StopReason::Failed;
  }
  try {
    backend.end_session();
  } catch (const std::exception& e) {
    if (!rec.failed) {
      rec.failed = true;
      rec.error = std::string("end of session: ") + e.what();
      rec.stop_reason = StopReason::Failed;
    }
  }
  rec.success = !rec.failed && best >= cfg.success_dice;
  return rec;
}

}  // namespace promptsim
