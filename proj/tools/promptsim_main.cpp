// promptsim command-line front end.
//
// Exit status: 0 success, 1 usage error, 2 data error (unreadable or
// invalid input), 3 experiment finished with failed sessions.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "promptsim/bridge.hpp"
#include "promptsim/config.hpp"
#include "promptsim/experiment.hpp"
#include "promptsim/metrics.hpp"
#include "promptsim/native_format.hpp"
#include "promptsim/oracle_backend.hpp"
#include "promptsim/phantom.hpp"
#include "promptsim/prompt_io.hpp"
#include "promptsim/replay_backend.hpp"

namespace {

using namespace promptsim;
using ordered_json = nlohmann::ordered_json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitFailures = 3;

/// Usage problems found after CLI11 parsing (conflicting flags and so on).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class OutFormat { Ndjson, Csv };

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + out_path + "'");
  out << text;
}

std::string metrics_ndjson(const MetricValues& m, const char* scope) {
  ordered_json j;
  j["scope"] = scope;
  j["dice"] = m.dice;
  j["nsd"] = m.nsd;
  j["asd_mm"] = m.asd_mm;
  j["hd95_mm"] = m.hd95_mm;
  return j.dump() + "\n";
}

std::string metrics_csv_row(const MetricValues& m, const char* scope) {
  return std::string(scope) + "," + format_number(m.dice) + "," + format_number(m.nsd) + "," +
         format_number(m.asd_mm) + "," + format_number(m.hd95_mm) + "\n";
}

AnnotatedSlices parse_slices(const std::string& text) {
  // "<axis>:i,j,k"
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--slices expects <axis>:i,j,k");
  AnnotatedSlices s;
  s.axis = parse_slice_axis(text.substr(0, colon));
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      s.indices.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw UsageError("bad slice index '" + item + "'");
    }
  }
  return s;
}

// ---------------------------------------------------------------------------

struct PhantomArgs {
  std::string spec_path;
  std::string out = "phantoms";
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  std::string volume_format = "nii";
};

int cmd_phantom(const PhantomArgs& a, OutFormat fmt) {
  PhantomSpec spec;
  if (!a.spec_path.empty()) {
    // A phantom spec is the dataset.phantom section of an experiment config.
    const auto cfg = parse_experiment_config(
        "{\"dataset\":{\"source\":\"phantom\",\"phantom\":" + read_file(a.spec_path) + "}}");
    spec = cfg.dataset.phantom;
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.count) {
    spec.train_count = 0;
    spec.val_count = 0;
    spec.test_count = *a.count;
  }
  spec.validate();
  const std::string ext = a.volume_format == "vgh" ? ".vgh" : ".nii";
  std::string listing = fmt == OutFormat::Csv ? "id,split,voxels,occupancy\n" : "";
  for (int i = 0; i < spec.total_count(); ++i) {
    const auto ph = generate_phantom(spec, i);
    const auto dir = std::filesystem::path(a.out) / phantom_split(spec, i) / phantom_id(i);
    std::filesystem::create_directories(dir);
    write_volume(ph.image, dir / ("image" + ext));
    write_mask(ph.gt, dir / ("label" + ext));
    const double occ = static_cast<double>(ph.gt.count()) / static_cast<double>(ph.gt.size());
    if (fmt == OutFormat::Csv) {
      listing += phantom_id(i) + "," + phantom_split(spec, i) + "," + std::to_string(ph.gt.count()) + "," +
                 format_number(occ) + "\n";
    } else {
      ordered_json j;
      j["id"] = phantom_id(i);
      j["split"] = phantom_split(spec, i);
      j["voxels"] = ph.gt.count();
      j["occupancy"] = occ;
      listing += j.dump() + "\n";
    }
  }
  std::cout << listing;
  return 0;
}

// ---------------------------------------------------------------------------

struct PromptsArgs {
  std::string gt;
  std::string pred;
  std::string config;
  int iteration = 0;
  std::uint64_t seed = 0;
  std::string style;
  std::string axis;
  std::optional<int> frequency;
  bool box = false;
  std::string out;
  std::string scribble_mask;
};

int cmd_prompts(const PromptsArgs& a) {
  PromptConfig pc;
  if (!a.config.empty()) pc = load_experiment_config(a.config).session.prompts;
  if (!a.style.empty()) pc.scribble_style = a.style == "none" ? std::nullopt : std::optional(parse_scribble_style(a.style));
  if (!a.axis.empty()) pc.slice_axis = parse_slice_axis(a.axis);
  if (a.frequency) pc.slice_frequency = *a.frequency;
  if (a.box) pc.use_box = true;
  pc.validate();
  if (a.iteration > 0 && a.pred.empty()) throw UsageError("--pred is required for iterations after 0");

  const auto gt = read_mask(a.gt);
  std::optional<BinaryMask> pred;
  if (!a.pred.empty()) {
    pred = read_mask(a.pred);
    require_same_geometry(gt, *pred, "prompts");
  }
  const auto set = build_prompt_set(gt, a.iteration > 0 ? &*pred : nullptr, pc, a.iteration, a.seed);
  emit(serialize_prompt_set(set), a.out);

  if (!a.scribble_mask.empty()) {
    // Inspection dump: 1 = positive scribble voxel, 2 = negative.
    VoxelGrid vis(gt.dims(), gt.spacing(), DType::UInt8);
    for (const auto& s : set.scribbles)
      for (const auto& v : s.voxels) vis.at(v.i, v.j, v.k) = s.polarity == Polarity::Positive ? 1.0f : 2.0f;
    write_volume(vis, a.scribble_mask);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
};

int cmd_simulate(const SimulateArgs& a, OutFormat fmt) {
  auto cfg = load_experiment_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.out.empty()) cfg.output_dir = a.out;
  if (a.workers) cfg.workers = *a.workers;
  cfg.validate();
  const auto result = run_experiment(cfg);
  const std::string summary = read_file(cfg.output_dir / "summary.csv");
  if (fmt == OutFormat::Csv) {
    std::cout << summary;
  } else {
    std::istringstream in(summary);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> cols;
    {
      std::stringstream hs(header);
      for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
    }
    for (std::string line; std::getline(in, line);) {
      std::stringstream ls(line);
      ordered_json j;
      std::size_t c = 0;
      for (std::string cell; std::getline(ls, cell, ',') && c < cols.size(); ++c) {
        if (c == 0) {
          j[cols[c]] = cell;
        } else {
          j[cols[c]] = std::stod(cell);
        }
      }
      std::cout << j.dump() << "\n";
    }
  }
  for (const auto& r : result.records) {
    if (r.failed) std::cerr << "session " << r.subject_id << " failed: " << r.error << "\n";
  }
  return result.failures > 0 ? kExitFailures : 0;
}

// ---------------------------------------------------------------------------

struct MetricsArgs {
  std::string a;
  std::string b;
  double tolerance = 1.0;
  std::string slices;
};

int cmd_metrics(const MetricsArgs& a, OutFormat fmt) {
  const auto pred = read_mask(a.a);
  const auto gt = read_mask(a.b);
  require_same_geometry(pred, gt, "metrics");
  std::optional<AnnotatedSlices> slices;
  if (!a.slices.empty()) slices = parse_slices(a.slices);
  const auto r = report(pred, gt, slices, a.tolerance);
  std::string out;
  if (fmt == OutFormat::Csv) {
    out = "scope,dice,nsd,asd_mm,hd95_mm\n" + metrics_csv_row(r.whole, "whole");
    if (r.annotated) out += metrics_csv_row(*r.annotated, "annotated");
  } else {
    out = metrics_ndjson(r.whole, "whole");
    if (r.annotated) out += metrics_ndjson(*r.annotated, "annotated");
  }
  std::cout << out;
  return 0;
}

// ---------------------------------------------------------------------------

int cmd_convert(const std::string& in, const std::string& out) {
  write_volume(read_volume(in), out);
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  bool stdio = false;
  std::string listen;
  std::string model = "dilation";
  std::string gt;
  std::uint64_t seed = 0;
  double radius = 3.0;
  double repair_radius = 8.0;
};

/// Returns the previous mask unchanged (empty at the first request).
class EchoBackend final : public Segmenter {
 public:
  BinaryMask segment(const SegmentationRequest& r) override {
    return r.previous_mask ? *r.previous_mask : BinaryMask(r.image->dims(), r.image->spacing());
  }
};

/// Returns a fixed mask at every request.
class ConstantBackend final : public Segmenter {
 public:
  explicit ConstantBackend(BinaryMask m) : mask_(std::move(m)) {}
  BinaryMask segment(const SegmentationRequest&) override { return mask_; }

 private:
  BinaryMask mask_;
};

int cmd_serve(const ServeArgs& a) {
  if (a.stdio == !a.listen.empty()) throw UsageError("serve needs exactly one of --stdio or --listen");
  std::optional<BinaryMask> gt;
  if (a.model == "oracle" || a.model == "gt") {
    if (a.gt.empty()) throw UsageError("--gt is required for model '" + a.model + "'");
    gt = read_mask(a.gt);
  } else if (a.model != "dilation" && a.model != "echo") {
    throw UsageError("unknown model '" + a.model + "'");
  }
  const SegmenterFactory factory = [&](const BridgeSession& s) -> std::unique_ptr<Segmenter> {
    if (a.model == "dilation") return std::make_unique<DilationBackend>(a.radius);
    if (a.model == "echo") return std::make_unique<EchoBackend>();
    require_same_geometry(*s.image, *gt, "served session");
    if (a.model == "gt") return std::make_unique<ConstantBackend>(*gt);
    OracleParams p;
    p.repair_radius_mm = a.repair_radius;
    return std::make_unique<OracleBackend>(OracleBackend::with_corruption(*gt, p, oracle_seed(a.seed)));
  };
  ServeResult result;
  if (a.stdio) {
    auto stream = stdio_stream();
    result = serve_bridge(*stream, factory);
  } else {
    const auto [host, port] = parse_host_port(a.listen);
    TcpListener listener(port, host);
    std::cerr << "listening on " << host << ":" << listener.port() << std::endl;
    auto stream = listener.accept();
    result = serve_bridge(*stream, factory);
  }
  return result == ServeResult::ProtocolError ? kExitData : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"promptsim: simulated visual-prompt sessions for interactive 3D segmentation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "ndjson";
  app.add_option("--format", format, "Machine-readable output: ndjson or csv")
      ->check(CLI::IsMember({"ndjson", "csv"}))
      ->capture_default_str();

  PhantomArgs pa;
  auto* phantom = app.add_subcommand("phantom", "Write a phantom dataset (<out>/<split>/<id>/image|label)");
  phantom->add_option("--config", pa.spec_path, "Phantom spec JSON (the dataset.phantom section of a config)");
  phantom->add_option("--out", pa.out, "Output directory")->capture_default_str();
  phantom->add_option("--seed", pa.seed, "Override the spec seed");
  phantom->add_option("--count", pa.count, "Generate this many test subjects (no train/val)")->check(CLI::PositiveNumber);
  phantom->add_option("--volume-format", pa.volume_format, "nii or vgh")
      ->check(CLI::IsMember({"nii", "vgh"}))
      ->capture_default_str();

  PromptsArgs pr;
  auto* prompts = app.add_subcommand("prompts", "Emit the simulated user's PromptSet for a gt/prediction pair");
  prompts->add_option("--gt", pr.gt, "Ground-truth mask")->required();
  prompts->add_option("--pred", pr.pred, "Current prediction (needed after iteration 0)");
  prompts->add_option("--config", pr.config, "Experiment config; its prompts section is used");
  prompts->add_option("--iteration", pr.iteration, "Iteration number")->check(CLI::NonNegativeNumber);
  prompts->add_option("--seed", pr.seed, "Session seed");
  prompts->add_option("--style", pr.style,
                      "Scribble style: centerline, warped_centerline, boundary, warped_boundary or none");
  prompts->add_option("--axis", pr.axis, "Slice axis: transverse or longitudinal");
  prompts->add_option("--frequency", pr.frequency, "Scribble every k-th nonempty slice")->check(CLI::PositiveNumber);
  prompts->add_flag("--box", pr.box, "Emit a bounding box at iteration 0");
  prompts->add_option("--out", pr.out, "PromptSet output file (default stdout)");
  prompts->add_option("--scribble-mask", pr.scribble_mask, "Also write scribbles as a label volume (1 pos, 2 neg)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run an experiment from a config file");
  simulate->add_option("--config", sa.config, "Experiment config JSON")->required();
  simulate->add_option("--seed", sa.seed, "Override the config seed");
  simulate->add_option("--out", sa.out, "Override the output directory");
  simulate->add_option("--workers", sa.workers, "Parallel sessions")->check(CLI::PositiveNumber);

  MetricsArgs ma;
  auto* metrics = app.add_subcommand("metrics", "Score a prediction mask against a reference mask");
  metrics->add_option("prediction", ma.a, "Prediction mask")->required();
  metrics->add_option("reference", ma.b, "Reference mask")->required();
  metrics->add_option("--tolerance", ma.tolerance, "NSD tolerance (mm)")->capture_default_str();
  metrics->add_option("--slices", ma.slices, "Also score these slices, e.g. transverse:3,5,9");

  std::string conv_in, conv_out;
  auto* convert = app.add_subcommand("convert", "Convert between NIfTI-1 (.nii) and native (.vgh/.vgd)");
  convert->add_option("input", conv_in, "Input volume")->required();
  convert->add_option("output", conv_out, "Output volume")->required();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Expose a backend over the bridge protocol (one session)");
  serve->add_flag("--stdio", sv.stdio, "Speak on stdin/stdout");
  serve->add_option("--listen", sv.listen, "TCP host:port (port 0 picks one; printed on stderr)");
  serve->add_option("--model", sv.model, "dilation, echo, gt or oracle")->capture_default_str();
  serve->add_option("--gt", sv.gt, "Reference mask for the gt and oracle models");
  serve->add_option("--seed", sv.seed, "Session seed (oracle corruption)");
  serve->add_option("--radius", sv.radius, "Dilation radius (mm)")->capture_default_str();
  serve->add_option("--repair-radius", sv.repair_radius, "Oracle repair radius (mm)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  const OutFormat fmt = format == "csv" ? OutFormat::Csv : OutFormat::Ndjson;

  try {
    if (*phantom) return cmd_phantom(pa, fmt);
    if (*prompts) return cmd_prompts(pr);
    if (*simulate) return cmd_simulate(sa, fmt);
    if (*metrics) return cmd_metrics(ma, fmt);
    if (*convert) return cmd_convert(conv_in, conv_out);
    if (*serve) return cmd_serve(sv);
  } catch (const UsageError& e) {
    std::cerr << "promptsim: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "promptsim: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
