#include "promptsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "promptsim/bridge.hpp"
#include "promptsim/native_format.hpp"
#include "promptsim/preprocess.hpp"
#include "promptsim/replay_backend.hpp"
#include "promptsim/rng.hpp"

namespace promptsim {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::filesystem::path find_volume(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* ext : {".nii", ".vgh"}) {
    auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p;
  }
  throw IoError("subject directory '" + dir.string() + "' has no " + stem + ".nii or " + stem + ".vgh");
}

void replace_all(std::string& s, const std::string& from, const std::string& to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
}

ordered_json metrics_json(const MetricValues& m) {
  ordered_json j;
  j["dice"] = m.dice;
  j["nsd"] = m.nsd;
  j["asd_mm"] = m.asd_mm;
  j["hd95_mm"] = m.hd95_mm;
  return j;
}

MetricValues metrics_from(const json& j) {
  return {j.at("dice").get<double>(), j.at("nsd").get<double>(), j.at("asd_mm").get<double>(),
          j.at("hd95_mm").get<double>()};
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double ci_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
}

/// Metrics of a session at iteration k with carry-forward; nullptr when the
/// session has nothing for that iteration in the requested scope.
const MetricValues* metrics_at(const SessionRecord& r, int k, MetricScope scope, double* ratio) {
  if (r.failed || r.iterations.empty()) return nullptr;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(k), r.iterations.size() - 1);
  const IterationRecord& it = r.iterations[idx];
  if (ratio) *ratio = static_cast<std::size_t>(k) < r.iterations.size() ? it.prompt_ratio : 0.0;
  if (scope == MetricScope::Whole) return &it.metrics.whole;
  return it.metrics.annotated ? &*it.metrics.annotated : nullptr;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + p.string() + "'");
}

}  // namespace

std::vector<Subject> list_subjects(const ExperimentConfig& cfg) {
  std::vector<Subject> out;
  if (cfg.dataset.source == DatasetConfig::Source::Phantom) {
    const auto& spec = cfg.dataset.phantom;
    for (int i = spec.train_count + spec.val_count; i < spec.total_count(); ++i) {
      out.push_back({phantom_id(i), i, {}, {}});
    }
    return out;
  }
  const auto& dir = cfg.dataset.directory;
  if (!std::filesystem::is_directory(dir)) throw IoError("dataset directory '" + dir.string() + "' does not exist");
  std::vector<std::filesystem::path> subdirs;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_directory()) subdirs.push_back(e.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  int index = 0;
  for (const auto& d : subdirs) {
    out.push_back({d.filename().string(), index++, find_volume(d, "image"), find_volume(d, "label")});
  }
  if (out.empty()) throw IoError("dataset directory '" + dir.string() + "' has no subject subdirectories");
  return out;
}

SubjectData load_subject(const ExperimentConfig& cfg, const Subject& subject) {
  VoxelGrid image;
  BinaryMask gt;
  if (subject.image_path.empty()) {
    auto ph = generate_phantom(cfg.dataset.phantom, subject.index);
    image = std::move(ph.image);
    gt = std::move(ph.gt);
  } else {
    image = read_volume(subject.image_path);
    gt = read_mask(subject.label_path);
    require_same_geometry(image, gt, "subject " + subject.id);
  }
  if (cfg.normalize_intensity) {
    const auto fg = foreground_by_intensity(image, 0.0);
    image = zscore_normalize(clip_percentiles(image, fg), fg);
  }
  image.set_dtype(DType::Float32);
  return {std::make_shared<const VoxelGrid>(std::move(image)), std::move(gt)};
}

std::uint64_t session_seed(std::uint64_t experiment_seed, int subject_index) {
  return Rng::derive(experiment_seed, {0x73657373696f6eULL, static_cast<std::uint64_t>(subject_index)}).next_u64();
}

std::uint64_t oracle_seed(std::uint64_t session_seed) {
  return Rng::derive(session_seed, {0x6f7261636c65ULL}).next_u64();
}

std::unique_ptr<Segmenter> make_backend(const ExperimentConfig& cfg, const Subject& subject, const SubjectData& data) {
  const auto& b = cfg.backend;
  const std::uint64_t seed = session_seed(cfg.seed, subject.index);
  switch (b.kind) {
    case BackendConfig::Kind::Oracle:
      return std::make_unique<OracleBackend>(
          OracleBackend::with_corruption(data.gt, b.oracle, oracle_seed(seed)));
    case BackendConfig::Kind::RegionGrow:
      return std::make_unique<RegionGrowBackend>(b.region_grow);
    case BackendConfig::Kind::Replay:
      return std::make_unique<ReplayBackend>(b.replay_directory / subject.id);
    case BackendConfig::Kind::Dilation:
      return std::make_unique<DilationBackend>(b.dilation_radius_mm);
    case BackendConfig::Kind::Bridge: {
      if (b.bridge.transport == BridgeConfig::Transport::Tcp) {
        const auto [host, port] = parse_host_port(b.bridge.address);
        return BridgeBackend::connect(host, port);
      }
      std::vector<std::string> argv = b.bridge.command;
      for (auto& a : argv) {
        if ((a.find("{image}") != std::string::npos || a.find("{label}") != std::string::npos) &&
            subject.image_path.empty()) {
          throw InvalidArgument("bridge command placeholders {image}/{label} need a directory dataset");
        }
        replace_all(a, "{subject}", subject.id);
        replace_all(a, "{seed}", std::to_string(seed));
        replace_all(a, "{image}", subject.image_path.string());
        replace_all(a, "{label}", subject.label_path.string());
      }
      return BridgeBackend::spawn(argv);
    }
  }
  throw InvalidArgument("unknown backend");
}

std::string session_record_to_json(const SessionRecord& rec) {
  ordered_json j;
  j["subject"] = rec.subject_id;
  j["config_hash"] = rec.config_hash;
  j["seed"] = rec.seed;
  j["failed"] = rec.failed;
  j["error"] = rec.failed ? ordered_json(rec.error) : ordered_json(nullptr);
  j["stop_reason"] = to_string(rec.stop_reason);
  j["success"] = rec.success;
  ordered_json its = ordered_json::array();
  for (const auto& it : rec.iterations) {
    ordered_json e;
    e["iteration"] = it.iteration;
    e["prompts"] = {{"points_positive", it.prompts.points_positive},
                    {"points_negative", it.prompts.points_negative},
                    {"boxes", it.prompts.boxes},
                    {"scribbles_positive", it.prompts.scribbles_positive},
                    {"scribbles_negative", it.prompts.scribbles_negative},
                    {"scribble_voxels", it.prompts.scribble_voxels}};
    e["prompt_ratio"] = it.prompt_ratio;
    e["whole"] = metrics_json(it.metrics.whole);
    e["annotated"] = it.metrics.annotated ? metrics_json(*it.metrics.annotated) : ordered_json(nullptr);
    its.push_back(std::move(e));
  }
  j["iterations"] = std::move(its);
  return j.dump();
}

SessionRecord parse_session_record(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError("session record", e.what());
  }
  try {
    SessionRecord r;
    r.subject_id = j.at("subject").get<std::string>();
    r.config_hash = j.at("config_hash").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.failed = j.at("failed").get<bool>();
    if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    r.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    r.success = j.at("success").get<bool>();
    for (const auto& e : j.at("iterations")) {
      IterationRecord it;
      it.iteration = e.at("iteration").get<int>();
      const auto& p = e.at("prompts");
      it.prompts.points_positive = p.at("points_positive").get<std::size_t>();
      it.prompts.points_negative = p.at("points_negative").get<std::size_t>();
      it.prompts.boxes = p.at("boxes").get<std::size_t>();
      it.prompts.scribbles_positive = p.at("scribbles_positive").get<std::size_t>();
      it.prompts.scribbles_negative = p.at("scribbles_negative").get<std::size_t>();
      it.prompts.scribble_voxels = p.at("scribble_voxels").get<std::size_t>();
      it.prompt_ratio = e.at("prompt_ratio").get<double>();
      it.metrics.whole = metrics_from(e.at("whole"));
      if (!e.at("annotated").is_null()) it.metrics.annotated = metrics_from(e.at("annotated"));
      r.iterations.push_back(it);
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError("session record", e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError("stop_reason", e.what());
  }
}

std::vector<AggregateRow> aggregate(const std::vector<SessionRecord>& records, int iterations, MetricScope scope) {
  std::vector<AggregateRow> rows;
  for (int k = 0; k < iterations; ++k) {
    std::vector<double> dice, nsd, asd, hd, ratio;
    for (const auto& r : records) {
      double q = 0.0;
      const MetricValues* m = metrics_at(r, k, scope, &q);
      if (!m) continue;
      dice.push_back(m->dice);
      nsd.push_back(m->nsd);
      asd.push_back(m->asd_mm);
      hd.push_back(m->hd95_mm);
      ratio.push_back(q);
    }
    AggregateRow row;
    row.iteration = k;
    row.n = dice.size();
    row.dice_mean = mean_of(dice);
    row.dice_ci = ci_of(dice);
    row.nsd_mean = mean_of(nsd);
    row.nsd_ci = ci_of(nsd);
    row.asd_mean = mean_of(asd);
    row.asd_ci = ci_of(asd);
    row.hd95_mean = mean_of(hd);
    row.hd95_ci = ci_of(hd);
    row.ratio_mean = mean_of(ratio);
    rows.push_back(row);
  }
  return rows;
}

SummaryRow summarize(const std::vector<SessionRecord>& records, int iterations, MetricScope scope,
                     double success_dice) {
  SummaryRow s;
  s.scope = scope == MetricScope::Whole ? "whole" : "annotated";
  std::vector<double> dice, nsd, asd, hd;
  std::size_t successes = 0;
  for (const auto& r : records) {
    if (r.failed) ++s.failed;
    const MetricValues* m = metrics_at(r, iterations - 1, scope, nullptr);
    if (scope == MetricScope::Whole ? r.success : (m && m->dice >= success_dice)) ++successes;
    if (!m) continue;
    dice.push_back(m->dice);
    nsd.push_back(m->nsd);
    asd.push_back(m->asd_mm);
    hd.push_back(m->hd95_mm);
  }
  s.n = dice.size();
  s.dice_mean = mean_of(dice);
  s.nsd_mean = mean_of(nsd);
  s.asd_mean = mean_of(asd);
  s.hd95_mean = mean_of(hd);
  s.success_rate = records.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(records.size());
  return s;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out = "iteration,n,dice_mean,dice_ci,nsd_mean,nsd_ci,asd_mean,asd_ci,hd95_mean,hd95_ci,ratio_mean\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + ',' + std::to_string(r.n);
    for (double v : {r.dice_mean, r.dice_ci, r.nsd_mean, r.nsd_ci, r.asd_mean, r.asd_ci, r.hd95_mean, r.hd95_ci,
                     r.ratio_mean}) {
      out += ',' + format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "scope,n,failed,dice_mean,nsd_mean,asd_mean,hd95_mean,success_rate\n";
  for (const auto& r : rows) {
    out += r.scope + ',' + std::to_string(r.n) + ',' + std::to_string(r.failed);
    for (double v : {r.dice_mean, r.nsd_mean, r.asd_mean, r.hd95_mean, r.success_rate}) out += ',' + format_number(v);
    out += '\n';
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto subjects = list_subjects(cfg);
  const std::string hash = config_hash(cfg);
  std::filesystem::create_directories(cfg.output_dir);

  std::vector<SessionRecord> records(subjects.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < subjects.size();) {
      const Subject& s = subjects[i];
      const std::uint64_t seed = session_seed(cfg.seed, s.index);
      try {
        const SubjectData data = load_subject(cfg, s);
        auto backend = make_backend(cfg, s, data);
        records[i] = run_session(data.image, data.gt, *backend, cfg.session, seed, s.id, hash);
      } catch (const std::exception& e) {
        SessionRecord r;
        r.subject_id = s.id;
        r.config_hash = hash;
        r.seed = seed;
        r.failed = true;
        r.error = e.what();
        r.stop_reason = StopReason::Failed;
        records[i] = std::move(r);
      }
    }
  };
  const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), subjects.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  const auto dir = cfg.output_dir;
  {
    std::string ndjson, timings;
    for (const auto& r : records) {
      ndjson += session_record_to_json(r) + '\n';
      for (const auto& it : r.iterations) {
        timings += r.subject_id + ' ' + std::to_string(it.iteration) + ' ' + format_number(it.wall_ms) + '\n';
      }
    }
    write_text(dir / "sessions.ndjson", ndjson);
    write_text(dir / "timings.log", timings);
    write_text(dir / "config.json", dump_experiment_config(cfg));
  }

  // Aggregates come from the serialized records.
  std::vector<SessionRecord> reread;
  {
    std::ifstream in(dir / "sessions.ndjson", std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) reread.push_back(parse_session_record(line));
    }
  }
  const int n = cfg.session.iterations;
  std::vector<SummaryRow> summary{summarize(reread, n, MetricScope::Whole, cfg.session.success_dice)};
  write_text(dir / "aggregate.csv", aggregate_csv(aggregate(reread, n, MetricScope::Whole)));
  if (cfg.session.prompts.slice_frequency > 1) {
    write_text(dir / "aggregate_annotated.csv", aggregate_csv(aggregate(reread, n, MetricScope::Annotated)));
    summary.push_back(summarize(reread, n, MetricScope::Annotated, cfg.session.success_dice));
  }
  write_text(dir / "summary.csv", summary_csv(summary));

  ExperimentResult result;
  result.records = std::move(records);
  for (const auto& r : result.records) result.failures += r.failed ? 1 : 0;
  return result;
}

}  // namespace promptsim
