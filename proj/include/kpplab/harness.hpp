#pragma once

// Experiment configs, dispatch to the modules, artifact manifests and plot
// data. Config files are flat "key = value" text; '#' starts a comment,
// lists are comma separated.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "kpplab/field.hpp"
#include "kpplab/spde.hpp"

namespace kpplab {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

enum class ExperimentKind { Simulate, Couple, Particle, Speed, Wave, Duality, Sweep };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_kind(const std::string& s);

/// Initial condition as written in a config: ic = bump | heavyside |
/// split_heavyside | ramp | zero | file.
struct IcSpec {
  std::string type = "bump";
  double center = 0.0;
  double eps = 1.0;
  double x0 = 0.0;
  double cap = kDefaultRampCap;
  /// Snapshot file for type "file".
  std::string file;

  Field render_on(const GridSpec& grid) const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Simulate;
  int schema_version = kConfigSchemaVersion;
  std::uint64_t seed = 1;
  /// 0 = all cores.
  unsigned jobs = 0;
  std::string out = "kpplab-out";
  std::size_t replicas = 1;
  double horizon = 1.0;
  /// θ, or the θ list of a sweep / θ-family.
  std::vector<double> thetas{1.0};

  SpdeParams params;
  GridSpec grid;
  IcSpec ic;
  std::size_t record_every = 1;
  std::vector<double> snapshot_times;
  double cap = kDefaultRampCap;

  // couple
  std::string coupling = "monotone";
  /// Lower initial datum = lower_scale · ic (monotone, claim2).
  double lower_scale = 0.5;
  /// Second datum = ic shifted right by this (two_independent, claim2).
  double ic2_shift = 0.0;
  /// Upper immigration constant (immigration coupling; alpha is the lower).
  double alpha2 = 0.0;
  /// [lo, hi] outside which alpha and alpha2 vanish; empty = everywhere.
  std::vector<double> alpha_window;

  // particle
  std::string particle_mode = "simulate";
  std::vector<int> particle_n{16};
  double c1 = 1.0;
  double death_rate = -1.0;
  double sample_dt = 0.01;
  std::size_t spde_replicas = 400;

  // duality
  std::string identity = "self";
  std::vector<double> split_times{0.0, 0.5};
  double x = 0.0;
  double beta_amp = 1.0;
  /// β is on for t <= beta_until · T (competition identity).
  double beta_until = 0.5;
  double g_center = 2.0;
  double z_threshold = 3.0;

  /// Defaults of the given kind (front experiments use the trimmed front grid).
  static ExperimentConfig defaults(ExperimentKind kind);

  /// Checks ranges and the module preconditions; throws UsageError naming the field.
  void validate() const;

  /// The constant c as a coefficient, restricted to alpha_window.
  Coefficient immigration(double c) const;

  /// Normalized "key = value" text of every key, in a fixed order. Without
  /// run keys, out and jobs (which never change results) are left out.
  std::string to_text(bool run_keys = true) const;
};

/// Known config keys in the order used by to_text().
const std::vector<std::string>& config_keys();

/// Sets one key; throws UsageError for unknown keys or bad values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// key → value pairs of a config file; duplicate keys are an error.
std::map<std::string, std::string> parse_config_text(const std::string& text,
                                                     const std::string& origin = "config");

/// Builds a config: file values, then KPPLAB_<KEY> environment variables,
/// then `overrides` (later wins). `kind` comes from the subcommand; a
/// different kind in the file is an error.
ExperimentConfig load_config(ExperimentKind kind, const std::string& config_path,
                             const std::map<std::string, std::string>& overrides,
                             bool read_environment = true);

struct ArtifactRecord {
  /// Relative to the output directory.
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string kind;
  std::string config_echo;
  std::string tool_version = kToolVersion;
  std::filesystem::path out_dir;
  std::vector<ArtifactRecord> artifacts;
  double wall_seconds = 0.0;
  std::size_t replicas = 0;
  /// Failed invariant assertions; nonempty means exit status 2.
  std::vector<std::string> failures;

  void write(const std::filesystem::path& file) const;
};

std::string sha256_hex(const std::filesystem::path& file);

/// Runs the experiment, writes artifacts under cfg.out and manifest.json.
/// Usage errors and runtime failures propagate as exceptions; failed
/// invariant assertions are collected in the manifest.
RunManifest run_experiment(const ExperimentConfig& cfg);

/// Plot kinds: markers, speed, duality, wave, sweep, comparison. Writes
/// <kind>_<series>.dat files (x y [yerr]) and <kind>.svg into the run
/// directory, adds them to the manifest and rewrites manifest.json.
/// Throws UsageError when the artifacts the plot needs are missing.
void emit_plot_data(RunManifest& manifest, const std::string& plot_kind);

/// Natural plot of an experiment kind ("" if none).
std::string default_plot_kind(const ExperimentConfig& cfg);

/// 0 pass, 2 assertion failure.
int exit_status(const RunManifest& manifest);

}  // namespace kpplab
