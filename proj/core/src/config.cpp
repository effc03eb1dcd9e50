#include "promptsim/config.hpp"

#include <cstdio>
#include <set>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace promptsim {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Reads keys from one JSON object, remembering which ones were consumed so
/// leftovers can be reported by done().
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError(path_.empty() ? "config" : path_, "expected an object");
  }
  /// Throws on keys that were never asked for.
  void done() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) throw ParseError(join(it.key()), "unknown key");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    used_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ParseError(join(key), e.what());
    }
  }

  const json* child(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

template <typename F>
auto with_field(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(path, e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

void read_phantom(const json& j, const std::string& path, PhantomSpec& s) {
  Reader r(j, path);
  std::array<std::int64_t, 3> dims{s.dims.nx, s.dims.ny, s.dims.nz};
  std::array<double, 3> spacing{s.spacing.x, s.spacing.y, s.spacing.z};
  r.get("dims", dims);
  r.get("spacing", spacing);
  s.dims = {dims[0], dims[1], dims[2]};
  s.spacing = {spacing[0], spacing[1], spacing[2]};
  r.get("radii_mm", s.radii_mm);
  r.get("radius_jitter", s.radius_jitter);
  r.get("centre_jitter_mm", s.centre_jitter_mm);
  r.get("deformation_mm", s.deformation_mm);
  r.get("deformation_scale_mm", s.deformation_scale_mm);
  r.get("smoothing_mm", s.smoothing_mm);
  r.get("speckle_sigma", s.speckle_sigma);
  r.get("blur_mm", s.blur_mm);
  r.get("intensity_inside", s.intensity_inside);
  r.get("intensity_outside", s.intensity_outside);
  r.get("shadow", s.shadow);
  r.get("shadow_axis", s.shadow_axis);
  r.get("shadow_attenuation", s.shadow_attenuation);
  r.get("train_count", s.train_count);
  r.get("val_count", s.val_count);
  r.get("test_count", s.test_count);
  r.get("seed", s.seed);
  r.done();
}

ordered_json write_phantom(const PhantomSpec& s) {
  ordered_json j;
  j["dims"] = {s.dims.nx, s.dims.ny, s.dims.nz};
  j["spacing"] = {s.spacing.x, s.spacing.y, s.spacing.z};
  j["radii_mm"] = s.radii_mm;
  j["radius_jitter"] = s.radius_jitter;
  j["centre_jitter_mm"] = s.centre_jitter_mm;
  j["deformation_mm"] = s.deformation_mm;
  j["deformation_scale_mm"] = s.deformation_scale_mm;
  j["smoothing_mm"] = s.smoothing_mm;
  j["speckle_sigma"] = s.speckle_sigma;
  j["blur_mm"] = s.blur_mm;
  j["intensity_inside"] = s.intensity_inside;
  j["intensity_outside"] = s.intensity_outside;
  j["shadow"] = s.shadow;
  j["shadow_axis"] = s.shadow_axis;
  j["shadow_attenuation"] = s.shadow_attenuation;
  j["train_count"] = s.train_count;
  j["val_count"] = s.val_count;
  j["test_count"] = s.test_count;
  j["seed"] = s.seed;
  return j;
}

void read_prompts(const json& j, const std::string& path, PromptConfig& p) {
  Reader r(j, path);
  r.get("use_points", p.use_points);
  r.get("points_per_iteration", p.points_per_iteration);
  r.get("use_box", p.use_box);
  if (const json* style = r.child("scribble_style")) {
    p.scribble_style = with_field(r.join("scribble_style"), [&] { return parse_scribble_style(style->get<std::string>()); });
  } else {
    p.scribble_style.reset();
  }
  std::string axis(to_string(p.slice_axis));
  r.get("slice_axis", axis);
  p.slice_axis = with_field(r.join("slice_axis"), [&] { return parse_slice_axis(axis); });
  r.get("slice_frequency", p.slice_frequency);
  r.get("min_region_voxels", p.min_region_voxels);
  if (const json* s = r.child("scribble")) {
    Reader q(*s, r.join("scribble"));
    q.get("break_coverage", p.scribble.break_coverage);
    q.get("break_scale_px", p.scribble.break_scale_px);
    q.get("warp_amplitude_px", p.scribble.warp_amplitude_px);
    q.get("warp_sigma_px", p.scribble.warp_sigma_px);
    q.get("thickness_sigma_px", p.scribble.thickness_sigma_px);
    q.get("thickness_threshold", p.scribble.thickness_threshold);
    q.get("boundary_sigma_px", p.scribble.boundary_sigma_px);
    q.done();
  }
  r.done();
}

ordered_json write_prompts(const PromptConfig& p) {
  ordered_json j;
  j["use_points"] = p.use_points;
  j["points_per_iteration"] = p.points_per_iteration;
  j["use_box"] = p.use_box;
  j["scribble_style"] = p.scribble_style ? ordered_json(to_string(*p.scribble_style)) : ordered_json(nullptr);
  j["slice_axis"] = to_string(p.slice_axis);
  j["slice_frequency"] = p.slice_frequency;
  j["min_region_voxels"] = p.min_region_voxels;
  ordered_json s;
  s["break_coverage"] = p.scribble.break_coverage;
  s["break_scale_px"] = p.scribble.break_scale_px;
  s["warp_amplitude_px"] = p.scribble.warp_amplitude_px;
  s["warp_sigma_px"] = p.scribble.warp_sigma_px;
  s["thickness_sigma_px"] = p.scribble.thickness_sigma_px;
  s["thickness_threshold"] = p.scribble.thickness_threshold;
  s["boundary_sigma_px"] = p.scribble.boundary_sigma_px;
  j["scribble"] = s;
  return j;
}

BackendConfig::Kind parse_backend_kind(const std::string& s) {
  if (s == "oracle") return BackendConfig::Kind::Oracle;
  if (s == "region_grow") return BackendConfig::Kind::RegionGrow;
  if (s == "replay") return BackendConfig::Kind::Replay;
  if (s == "dilation") return BackendConfig::Kind::Dilation;
  if (s == "bridge") return BackendConfig::Kind::Bridge;
  throw InvalidArgument("unknown backend kind '" + s + "'");
}

void read_backend(const json& j, const std::string& path, const std::filesystem::path& base, BackendConfig& b) {
  Reader r(j, path);
  std::string kind(to_string(b.kind));
  r.get("kind", kind);
  b.kind = with_field(r.join("kind"), [&] { return parse_backend_kind(kind); });
  if (const json* o = r.child("oracle")) {
    Reader q(*o, r.join("oracle"));
    q.get("repair_radius_mm", b.oracle.repair_radius_mm);
    q.get("corruption_dice_min", b.oracle.corruption_dice_min);
    q.get("corruption_dice_max", b.oracle.corruption_dice_max);
    q.done();
  }
  if (const json* g = r.child("region_grow")) {
    Reader q(*g, r.join("region_grow"));
    q.get("intensity_tolerance", b.region_grow.intensity_tolerance);
    q.get("max_geodesic_mm", b.region_grow.max_geodesic_mm);
    q.get("barrier_radius_mm", b.region_grow.barrier_radius_mm);
    q.done();
  }
  if (const json* rp = r.child("replay")) {
    Reader q(*rp, r.join("replay"));
    std::string dir = b.replay_directory.string();
    q.get("directory", dir);
    b.replay_directory = resolve(base, dir);
    q.done();
  }
  if (const json* d = r.child("dilation")) {
    Reader q(*d, r.join("dilation"));
    q.get("radius_mm", b.dilation_radius_mm);
    q.done();
  }
  if (const json* br = r.child("bridge")) {
    Reader q(*br, r.join("bridge"));
    std::string transport = b.bridge.transport == BridgeConfig::Transport::Stdio ? "stdio" : "tcp";
    q.get("transport", transport);
    if (transport == "stdio") {
      b.bridge.transport = BridgeConfig::Transport::Stdio;
    } else if (transport == "tcp") {
      b.bridge.transport = BridgeConfig::Transport::Tcp;
    } else {
      throw ParseError(q.join("transport"), "expected 'stdio' or 'tcp'");
    }
    q.get("command", b.bridge.command);
    q.get("address", b.bridge.address);
    q.done();
  }
  r.done();
}

ordered_json write_backend(const BackendConfig& b) {
  ordered_json j;
  j["kind"] = to_string(b.kind);
  j["oracle"] = {{"repair_radius_mm", b.oracle.repair_radius_mm},
                 {"corruption_dice_min", b.oracle.corruption_dice_min},
                 {"corruption_dice_max", b.oracle.corruption_dice_max}};
  j["region_grow"] = {{"intensity_tolerance", b.region_grow.intensity_tolerance},
                      {"max_geodesic_mm", b.region_grow.max_geodesic_mm},
                      {"barrier_radius_mm", b.region_grow.barrier_radius_mm}};
  j["replay"] = {{"directory", b.replay_directory.generic_string()}};
  j["dilation"] = {{"radius_mm", b.dilation_radius_mm}};
  j["bridge"] = {{"transport", b.bridge.transport == BridgeConfig::Transport::Stdio ? "stdio" : "tcp"},
                 {"command", b.bridge.command},
                 {"address", b.bridge.address}};
  return j;
}

ordered_json to_ordered(const ExperimentConfig& c, bool for_hash) {
  ordered_json j;
  ordered_json ds;
  ds["source"] = c.dataset.source == DatasetConfig::Source::Phantom ? "phantom" : "directory";
  ds["directory"] = c.dataset.directory.generic_string();
  ds["phantom"] = write_phantom(c.dataset.phantom);
  j["dataset"] = ds;
  j["backend"] = write_backend(c.backend);
  j["prompts"] = write_prompts(c.session.prompts);
  j["iterations"] = c.session.iterations;
  j["success_dice"] = c.session.success_dice;
  j["early_stop"] = c.session.early_stop;
  j["nsd_tolerance_mm"] = c.session.nsd_tolerance_mm;
  j["normalize_intensity"] = c.normalize_intensity;
  j["seed"] = c.seed;
  if (!for_hash) {
    j["output_dir"] = c.output_dir.generic_string();
    j["workers"] = c.workers;
  }
  return j;
}

}  // namespace

std::string_view to_string(BackendConfig::Kind k) noexcept {
  switch (k) {
    case BackendConfig::Kind::Oracle: return "oracle";
    case BackendConfig::Kind::RegionGrow: return "region_grow";
    case BackendConfig::Kind::Replay: return "replay";
    case BackendConfig::Kind::Dilation: return "dilation";
    case BackendConfig::Kind::Bridge: return "bridge";
  }
  return "oracle";
}

void ExperimentConfig::validate() const {
  session.validate();
  if (dataset.source == DatasetConfig::Source::Phantom) {
    dataset.phantom.validate();
    if (dataset.phantom.test_count == 0) throw InvalidArgument("phantom dataset has an empty test split");
  } else if (dataset.directory.empty()) {
    throw InvalidArgument("dataset.directory is required for a directory source");
  }
  if (workers < 1) throw InvalidArgument("workers must be >= 1");
  if (backend.kind == BackendConfig::Kind::Replay && backend.replay_directory.empty()) {
    throw InvalidArgument("backend.replay.directory is required for the replay backend");
  }
  if (backend.kind == BackendConfig::Kind::Bridge && backend.bridge.transport == BridgeConfig::Transport::Stdio &&
      backend.bridge.command.empty()) {
    throw InvalidArgument("backend.bridge.command is required for the stdio transport");
  }
}

ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError("config", e.what());
  }
  ExperimentConfig c;
  {
    Reader r(root, "");
    if (const json* ds = r.child("dataset")) {
      Reader q(*ds, "dataset");
      std::string source = "phantom";
      q.get("source", source);
      if (source == "phantom") {
        c.dataset.source = DatasetConfig::Source::Phantom;
      } else if (source == "directory") {
        c.dataset.source = DatasetConfig::Source::Directory;
      } else {
        throw ParseError("dataset.source", "expected 'phantom' or 'directory'");
      }
      std::string dir;
      q.get("directory", dir);
      c.dataset.directory = resolve(base_dir, dir);
      if (const json* ph = q.child("phantom")) read_phantom(*ph, "dataset.phantom", c.dataset.phantom);
      q.done();
    }
    if (const json* b = r.child("backend")) read_backend(*b, "backend", base_dir, c.backend);
    if (const json* p = r.child("prompts")) read_prompts(*p, "prompts", c.session.prompts);
    r.get("iterations", c.session.iterations);
    r.get("success_dice", c.session.success_dice);
    r.get("early_stop", c.session.early_stop);
    r.get("nsd_tolerance_mm", c.session.nsd_tolerance_mm);
    r.get("normalize_intensity", c.normalize_intensity);
    r.get("seed", c.seed);
    std::string out = c.output_dir.string();
    r.get("output_dir", out);
    c.output_dir = resolve(base_dir, out);
    r.get("workers", c.workers);
    r.done();
  }
  with_field("config", [&] {
    c.validate();
    return 0;
  });
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

std::string dump_experiment_config(const ExperimentConfig& cfg) { return to_ordered(cfg, false).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = to_ordered(cfg, true).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace promptsim
