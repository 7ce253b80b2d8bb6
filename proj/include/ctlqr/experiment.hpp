#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ctlqr/parallel.hpp"
#include "ctlqr/policy.hpp"

namespace ctlqr {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct ExperimentConfig {
  /// "airplane" or a path to a system file.
  std::string system = "airplane";
  double horizon = 2e4;
  double dt = 1e-2;
  /// Brownian base resolution (0: same as dt).
  double noise_dt = 0.0;
  double gamma0 = 25.0;
  double growth = 1.2;
  int replicates = 20;
  std::uint64_t base_seed = 1;
  bool coupled = true;
  bool oracle_safeguard = true;
  double ridge = 1e-6;
  double initial_estimate_std = 0.05;
  double blow_up_threshold = 1e6;
  int max_resample = 50;
  /// Empty: update times plus the horizon.
  std::vector<double> checkpoints;

  /// Throws ConfigError on out-of-range values.
  void check() const;
  PolicyOptions policy_options() const;

  bool operator==(const ExperimentConfig&) const = default;
};

/// key = value lines; '#' starts a comment. Keys match the field names;
/// checkpoints is "auto" or a comma-separated list of times.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
void write_config(std::ostream& out, const ExperimentConfig& cfg);

/// JSON image of the configuration (the "config" object of meta.json).
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& json);

struct Dataset {
  ExperimentConfig config;
  std::vector<RunRecord> runs;
};

/// Replicate i runs with seed base_seed + i. A failing replicate is kept as
/// an aborted record and does not affect the others. Results do not depend
/// on the execution mode or thread count.
Dataset run_replicates(const ExperimentConfig& cfg,
                       Execution execution = Execution::kParallel);

/// Writes regret.csv, estimation.csv and meta.json into out_dir.
void emit_csv(const Dataset& data, const std::string& out_dir);

std::string meta_json(const Dataset& data);
/// Configuration stored in a meta.json document.
ExperimentConfig config_from_meta(const std::string& meta);

}  // namespace ctlqr
