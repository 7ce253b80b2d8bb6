#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ctlqr/estimator.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/regret.hpp"

namespace ctlqr {

/// Geometric update times gamma_n = gamma0 * growth^n, n >= 0, up to the
/// horizon. Successive ratios (gamma_{n+1} - gamma_n) / gamma_n all equal
/// growth - 1.
struct EpisodeSchedule {
  double gamma0 = 25.0;
  double growth = 1.2;
  double horizon = 0.0;
  std::vector<double> times;

  double beta_lower() const { return growth - 1.0; }
  double beta_upper() const { return growth - 1.0; }
};

EpisodeSchedule schedule(double gamma0, double growth, double horizon);

struct SafeguardEvent {
  enum class Kind { kResample, kAbort };
  int episode = 0;
  Kind kind = Kind::kResample;
  std::string detail;
};

const char* to_string(SafeguardEvent::Kind kind);

struct PolicyOptions {
  /// Check candidate gains against the true plant and redraw the
  /// randomization when they fail to stabilize it. Uses ground truth.
  bool oracle_safeguard = true;
  int max_resample = 50;
  double blow_up_threshold = 1e6;
  double initial_estimate_std = 0.05;
  double ridge = 1e-6;
  /// Adaptive and oracle systems share one noise path.
  bool coupled = true;
  /// Brownian base resolution: dt must be an integer multiple. 0 means dt.
  double noise_dt = 0.0;
  /// Regret checkpoints; empty means every update time plus the horizon.
  std::vector<double> checkpoints;

  // Test hooks.
  bool zero_perturbation = false;
  /// Replace the least-squares fit by the true parameters.
  bool truth_estimates = false;
  std::optional<Matrix> initial_theta;
};

/// Outcome of the stability check on one randomized estimate.
struct SafeguardResult {
  Gain gain;
  ParameterEstimate estimate;
  std::vector<SafeguardEvent> events;
  bool aborted = false;
};

/// Draws a fresh randomization for resample attempt `attempt`.
using Redraw = std::function<ParameterEstimate(int attempt)>;

/// K(theta_hat) with the stability safeguard. A candidate is rejected when
/// its Riccati equation has no stabilizing solution, or (oracle_safeguard)
/// when it does not stabilize the true plant; rejected candidates are
/// replaced through `redraw` up to max_resample times.
SafeguardResult safeguard(const ParameterEstimate& estimate,
                          const Dynamics& truth, const CostSpec& cost,
                          const Redraw& redraw, const PolicyOptions& options);

struct EpisodeRecord {
  int index = 0;
  /// Update time on the dt grid.
  double gamma_n = 0.0;
  Matrix theta;
  Matrix ls_part;
  Matrix perturbation;
  double estimation_error = 0.0;
  Gain gain;
  int resamples = 0;
  /// Self-normalized noise statistic at gamma_n.
  double noise_statistic = 0.0;
};

struct RunRecord {
  enum class Status { kOk, kAborted };

  std::uint64_t seed = 0;
  double dt = 0.0;
  double horizon = 0.0;
  Status status = Status::kOk;
  std::string abort_reason;
  ParameterEstimate initial;
  Gain initial_gain;
  Gain optimal_gain;
  std::vector<EpisodeRecord> episodes;
  std::vector<SafeguardEvent> events;
  RegretCurve regret;
  /// int |(K_t - K*) x_t|^2 dt at each regret checkpoint.
  std::vector<double> quadratic_term;
  /// int x x' dt over the whole run.
  Matrix state_gram;
  double wall_seconds = 0.0;

  bool ok() const { return status == Status::kOk; }
};

/// Randomized certainty-equivalent policy. Episode 0 runs [0, gamma_0) on
/// the initial estimate; at every gamma_n the least-squares fit over the
/// entire history is randomized, safeguarded and turned into the gain for
/// [gamma_n, gamma_{n+1}). Failures are recorded in the returned record.
RunRecord run_algorithm1(const Dynamics& dyn, const CostSpec& cost,
                         const EpisodeSchedule& sched, double dt,
                         std::uint64_t seed, const PolicyOptions& options = {});

/// Deterministic RNG for (seed, purpose, episode, attempt).
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t purpose,
                           std::uint64_t episode = 0,
                           std::uint64_t attempt = 0);

}  // namespace ctlqr
