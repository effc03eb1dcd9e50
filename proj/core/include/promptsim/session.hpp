#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "promptsim/backend.hpp"
#include "promptsim/metrics.hpp"
#include "promptsim/prompts.hpp"

namespace promptsim {

struct SessionConfig {
  PromptConfig prompts;
  int iterations = 11;
  double success_dice = 0.95;
  bool early_stop = false;
  double nsd_tolerance_mm = 1.0;

  void validate() const;
};

/// Counts of the prompts issued in one iteration.
struct PromptSummary {
  std::size_t points_positive = 0;
  std::size_t points_negative = 0;
  std::size_t boxes = 0;
  std::size_t scribbles_positive = 0;
  std::size_t scribbles_negative = 0;
  std::size_t scribble_voxels = 0;

  static PromptSummary of(const PromptSet& set);
  friend bool operator==(const PromptSummary&, const PromptSummary&) = default;
};

struct IterationRecord {
  int iteration = 0;
  PromptSummary prompts;
  /// Scribble voxels issued this iteration divided by |gt|.
  double prompt_ratio = 0.0;
  MetricsReport metrics;
  /// Wall time of the backend call. Not part of the serialized record.
  double wall_ms = 0.0;

  friend bool operator==(const IterationRecord& a, const IterationRecord& b) {
    return a.iteration == b.iteration && a.prompts == b.prompts && a.prompt_ratio == b.prompt_ratio &&
           a.metrics == b.metrics;
  }
};

enum class StopReason : std::uint8_t { Iterations, Converged, EarlyStop, Failed };
std::string_view to_string(StopReason r) noexcept;
StopReason parse_stop_reason(std::string_view s);

struct SessionRecord {
  std::string subject_id;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<IterationRecord> iterations;
  StopReason stop_reason = StopReason::Iterations;
  /// Best whole-volume Dice reached the success bar.
  bool success = false;
  bool failed = false;
  std::string error;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

/// Metrics that tolerate empty masks: two empty masks score (1, 1, 0, 0);
/// exactly one empty mask scores Dice 0, NSD 0 and the volume diagonal (mm)
/// as ASD and HD95.
MetricValues score_total(const BinaryMask& pred, const BinaryMask& gt, double tolerance_mm);
MetricsReport report_total(const BinaryMask& pred, const BinaryMask& gt, const std::optional<AnnotatedSlices>& slices,
                           double tolerance_mm);

/// Optional per-iteration hook, e.g. for dumping prompts and predictions.
struct SessionObserver {
  virtual ~SessionObserver() = default;
  virtual void on_iteration(int iteration, const PromptSet& prompts, const BinaryMask& prediction) = 0;
};

/// Simulated interactive session. Iteration 0 prompts come from gt alone,
/// iteration k from (gt, prediction k-1); the backend is called once per
/// iteration and metrics are recorded after each call. Stops after
/// cfg.iterations, when the previous prediction equals gt (nothing left to
/// prompt), or on early_stop once Dice >= success_dice. Backend or metric
/// errors end the session with `failed` set and the partial record kept.
///
/// Annotated-slice metrics (when slice_frequency > 1) use every slice that
/// has received a scribble so far in the session.
SessionRecord run_session(std::shared_ptr<const VoxelGrid> image, const BinaryMask& gt, Segmenter& backend,
                          const SessionConfig& cfg, std::uint64_t seed, const std::string& subject_id,
                          const std::string& config_hash = {}, SessionObserver* observer = nullptr);

}  // namespace promptsim
