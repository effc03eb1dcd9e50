#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "promptsim/oracle_backend.hpp"
#include "promptsim/phantom.hpp"
#include "promptsim/prompts.hpp"
#include "promptsim/region_grow_backend.hpp"
#include "promptsim/session.hpp"

namespace promptsim {

struct DatasetConfig {
  enum class Source : std::uint8_t { Phantom, Directory };
  Source source = Source::Phantom;
  /// Directory source: one subdirectory per subject holding
  /// image.(nii|vgh) and label.(nii|vgh).
  std::filesystem::path directory;
  /// Phantom source: the test split of this spec is used.
  PhantomSpec phantom;
};

struct BridgeConfig {
  enum class Transport : std::uint8_t { Stdio, Tcp };
  Transport transport = Transport::Stdio;
  /// Stdio: program and arguments. "{subject}", "{seed}", "{image}" and
  /// "{label}" are substituted per session (the last two need a directory
  /// dataset).
  std::vector<std::string> command;
  /// Tcp: "host:port"; one connection per session.
  std::string address = "127.0.0.1:9000";
};

struct BackendConfig {
  enum class Kind : std::uint8_t { Oracle, RegionGrow, Replay, Dilation, Bridge };
  Kind kind = Kind::Oracle;
  OracleParams oracle;
  RegionGrowParams region_grow;
  /// Replay: predictions are read from <directory>/<subject>/iter_<k>.*
  std::filesystem::path replay_directory;
  double dilation_radius_mm = 3.0;
  BridgeConfig bridge;
};

std::string_view to_string(BackendConfig::Kind k) noexcept;

struct ExperimentConfig {
  DatasetConfig dataset;
  BackendConfig backend;
  SessionConfig session;
  /// Clip to the 0.5/99.5 percentiles and z-score the image (statistics over
  /// voxels > 0) before it reaches the backend.
  bool normalize_intensity = false;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "promptsim_out";
  int workers = 1;

  void validate() const;
};

/// Parses the JSON config document. Missing keys keep their defaults;
/// unknown keys and ill-typed values throw ParseError naming the key path.
/// Relative paths are resolved against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Full config as JSON with every field present, pretty-printed.
std::string dump_experiment_config(const ExperimentConfig& cfg);

/// FNV-1a (64-bit, hex) of the canonical config with output_dir and workers
/// left out, since neither affects results.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace promptsim
