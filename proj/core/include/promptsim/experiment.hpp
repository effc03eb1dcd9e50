#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "promptsim/backend.hpp"
#include "promptsim/config.hpp"
#include "promptsim/session.hpp"

namespace promptsim {

/// One subject of a dataset, loaded lazily by the worker that runs it.
struct Subject {
  std::string id;
  int index = 0;
  std::filesystem::path image_path;  // empty for phantoms
  std::filesystem::path label_path;
};

std::vector<Subject> list_subjects(const ExperimentConfig& cfg);

struct SubjectData {
  std::shared_ptr<const VoxelGrid> image;  // float32, after optional normalization
  BinaryMask gt;
};

SubjectData load_subject(const ExperimentConfig& cfg, const Subject& subject);

/// Per-session seed: a fixed function of the experiment seed and subject
/// index.
std::uint64_t session_seed(std::uint64_t experiment_seed, int subject_index);
/// Seed of the oracle's initial corruption for a session.
std::uint64_t oracle_seed(std::uint64_t session_seed);

/// Builds the backend configured for one session.
std::unique_ptr<Segmenter> make_backend(const ExperimentConfig& cfg, const Subject& subject, const SubjectData& data);

/// One NDJSON line (without newline) and its inverse.
std::string session_record_to_json(const SessionRecord& rec);
SessionRecord parse_session_record(std::string_view line);

struct AggregateRow {
  int iteration = 0;
  std::size_t n = 0;
  double dice_mean = 0, dice_ci = 0;
  double nsd_mean = 0, nsd_ci = 0;
  double asd_mean = 0, asd_ci = 0;
  double hd95_mean = 0, hd95_ci = 0;
  double ratio_mean = 0;
};

enum class MetricScope : std::uint8_t { Whole, Annotated };

/// Per-iteration mean and 95% normal-approximation CI (1.96 * sample sd /
/// sqrt(n)) over non-failed sessions. Sessions that stopped before
/// `iterations` carry their last metrics forward with prompt ratio 0.
/// Annotated scope skips sessions without annotated metrics at that
/// iteration.
std::vector<AggregateRow> aggregate(const std::vector<SessionRecord>& records, int iterations, MetricScope scope);

struct SummaryRow {
  std::string scope;
  std::size_t n = 0;  // sessions contributing
  std::size_t failed = 0;
  double dice_mean = 0, nsd_mean = 0, asd_mean = 0, hd95_mean = 0;
  /// Fraction of all sessions counted successful. Whole scope uses the
  /// session success flag; annotated scope uses final annotated Dice.
  double success_rate = 0;
};

SummaryRow summarize(const std::vector<SessionRecord>& records, int iterations, MetricScope scope,
                     double success_dice);

std::string aggregate_csv(const std::vector<AggregateRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

/// Shortest round-trip decimal form used in every CSV cell.
std::string format_number(double v);

struct ExperimentResult {
  std::vector<SessionRecord> records;
  std::size_t failures = 0;
};

/// Runs every subject (workers sessions at a time) and writes into
/// cfg.output_dir: sessions.ndjson, aggregate.csv, summary.csv,
/// aggregate_annotated.csv (slice_frequency > 1), config.json and
/// timings.log. Aggregates are computed by re-reading sessions.ndjson.
/// Only timings.log depends on anything but (config, seed, dataset bytes).
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace promptsim
