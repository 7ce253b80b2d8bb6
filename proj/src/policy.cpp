#include "ctlqr/policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

enum Purpose : std::uint64_t { kInitial = 1, kRandomize = 2 };

std::uint64_t noise_substeps(double dt, double noise_dt) {
  if (noise_dt <= 0.0) return 1;
  const double ratio = dt / noise_dt;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * rounded) {
    throw ConfigError("dt must be an integer multiple of noise_dt");
  }
  return static_cast<std::uint64_t>(rounded);
}

}  // namespace

const char* to_string(SafeguardEvent::Kind kind) {
  return kind == SafeguardEvent::Kind::kResample ? "resample" : "abort";
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t purpose,
                           std::uint64_t episode, std::uint64_t attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose),
                    static_cast<std::uint32_t>(episode),
                    static_cast<std::uint32_t>(attempt)};
  return std::mt19937_64(seq);
}

EpisodeSchedule schedule(double gamma0, double growth, double horizon) {
  if (!(gamma0 > 0.0)) throw ScheduleError("gamma0 must be positive");
  if (!(growth > 1.0)) {
    throw ScheduleError("growth must exceed 1 so that episodes lengthen");
  }
  if (!(horizon >= gamma0)) throw ScheduleError("horizon must be >= gamma0");
  EpisodeSchedule s{gamma0, growth, horizon, {}};
  for (int n = 0;; ++n) {
    const double g = gamma0 * std::pow(growth, n);
    if (g > horizon * (1.0 + 1e-12)) break;
    s.times.push_back(g);
  }
  for (std::size_t n = 0; n + 1 < s.times.size(); ++n) {
    const double ratio = (s.times[n + 1] - s.times[n]) / s.times[n];
    if (std::abs(ratio - (growth - 1.0)) > 1e-9) {
      throw ScheduleError("episode length ratio outside its bounds");
    }
  }
  return s;
}

SafeguardResult safeguard(const ParameterEstimate& estimate,
                          const Dynamics& truth, const CostSpec& cost,
                          const Redraw& redraw, const PolicyOptions& options) {
  SafeguardResult out;
  ParameterEstimate candidate = estimate;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) candidate = redraw(attempt);
    std::string reason;
    try {
      const Matrix A_hat = candidate.A();
      const Matrix B_hat = candidate.B();
      Gain K = optimal_gain(A_hat, B_hat, cost.Q, cost.R);
      const Matrix closed = options.oracle_safeguard
                                ? Matrix(truth.A + truth.B * K.K)
                                : Matrix(A_hat + B_hat * K.K);
      if (is_hurwitz(closed)) {
        out.gain = std::move(K);
        out.estimate = std::move(candidate);
        return out;
      }
      reason = options.oracle_safeguard
                   ? "gain does not stabilize the true plant"
                   : "gain does not stabilize the estimate";
    } catch (const Error& e) {
      reason = std::string("Riccati failure: ") + e.what();
    }
    if (attempt >= options.max_resample) {
      out.events.push_back({estimate.episode_index,
                            SafeguardEvent::Kind::kAbort,
                            "resample budget exhausted; last: " + reason});
      out.aborted = true;
      out.estimate = std::move(candidate);
      return out;
    }
    out.events.push_back(
        {estimate.episode_index, SafeguardEvent::Kind::kResample, reason});
  }
}

RunRecord run_algorithm1(const Dynamics& dyn, const CostSpec& cost,
                         const EpisodeSchedule& sched, double dt,
                         std::uint64_t seed, const PolicyOptions& options) {
  const auto clock_start = std::chrono::steady_clock::now();
  dyn.check_shapes();
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");

  const Eigen::Index p = dyn.p();
  const Eigen::Index q = dyn.q();
  RunRecord rec;
  rec.seed = seed;
  rec.dt = dt;
  rec.horizon = sched.horizon;
  rec.optimal_gain = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  const Matrix& K_star = rec.optimal_gain.K;
  const Matrix truth = dyn.theta();

  const std::uint64_t substeps = noise_substeps(dt, options.noise_dt);
  const NoisePath adaptive_noise(seed, dt, static_cast<std::size_t>(p),
                                 substeps, 0);
  const NoisePath oracle_noise(seed, dt, static_cast<std::size_t>(p),
                               substeps, options.coupled ? 0 : 1);

  if (options.initial_theta) {
    rec.initial = with_perturbation(
        *options.initial_theta,
        Matrix::Zero(options.initial_theta->rows(),
                     options.initial_theta->cols()),
        0);
  } else {
    auto rng = stream_rng(seed, kInitial);
    rec.initial =
        initial_estimate(dyn, cost, options.initial_estimate_std, rng);
  }
  rec.initial_gain = optimal_gain(rec.initial.A(), rec.initial.B(), cost.Q,
                                  cost.R);

  const std::uint64_t total = steps_for(sched.horizon, dt);
  std::vector<std::uint64_t> boundaries;
  for (double g : sched.times) {
    const std::uint64_t b = steps_for(g, dt);
    if (b > 0 && b <= total) boundaries.push_back(b);
  }
  std::vector<std::uint64_t> checkpoints;
  if (options.checkpoints.empty()) {
    checkpoints = boundaries;
    checkpoints.push_back(total);
  } else {
    for (double t : options.checkpoints) {
      const std::uint64_t c = steps_for(t, dt);
      if (c > 0 && c <= total) checkpoints.push_back(c);
    }
  }
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());
  std::vector<std::uint64_t> events = boundaries;
  events.insert(events.end(), checkpoints.begin(), checkpoints.end());
  events.push_back(total);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  SimulationOptions sim;
  sim.record_stride = 0;
  sim.blow_up_threshold = options.blow_up_threshold;

  EstimatorAccumulators acc = EstimatorAccumulators::zeros(p, q);
  SegmentState state_a{Vector::Zero(p)};
  SegmentState state_o{Vector::Zero(p)};
  Trajectory traj_a, traj_o;
  Gain K = rec.initial_gain;
  Matrix delta = K.K - K_star;
  double quadratic = 0.0;
  std::vector<double> reached_checkpoints;
  std::size_t next_boundary = 0, next_checkpoint = 0;
  int episode = 0;

  auto abort_run = [&](int ep, const std::string& why) {
    rec.status = RunRecord::Status::kAborted;
    rec.abort_reason = why;
    rec.events.push_back({ep, SafeguardEvent::Kind::kAbort, why});
  };

  try {
    for (std::uint64_t stop : events) {
      if (stop > state_a.step || traj_a.empty()) {
        const Matrix gram_before = acc.state_gram();
        SegmentResult seg_a = simulate_segment(dyn, cost, K, state_a,
                                               stop - state_a.step,
                                               adaptive_noise, &acc, sim);
        SegmentResult seg_o = simulate_segment(dyn, cost, rec.optimal_gain,
                                               state_o, stop - state_o.step,
                                               oracle_noise, nullptr, sim);
        quadratic += ((delta.transpose() * delta) *
                      (acc.state_gram() - gram_before)).trace();
        traj_a.append(seg_a.trajectory);
        traj_o.append(seg_o.trajectory);
        state_a = seg_a.end;
        state_o = seg_o.end;
      }
      if (next_checkpoint < checkpoints.size() &&
          checkpoints[next_checkpoint] == stop) {
        reached_checkpoints.push_back(static_cast<double>(stop) * dt);
        rec.quadratic_term.push_back(quadratic);
        ++next_checkpoint;
      }
      if (next_boundary < boundaries.size() &&
          boundaries[next_boundary] == stop) {
        ++next_boundary;
        const double gamma = static_cast<double>(stop) * dt;
        const Matrix ls =
            options.truth_estimates ? truth : least_squares(acc, options.ridge);
        const int n = episode;
        Redraw draw = [&](int attempt) {
          if (options.zero_perturbation) {
            return with_perturbation(ls, Matrix::Zero(ls.rows(), ls.cols()),
                                     n);
          }
          auto rng = stream_rng(seed, kRandomize,
                                static_cast<std::uint64_t>(n),
                                static_cast<std::uint64_t>(attempt));
          return randomize(ls, gamma, rng, n);
        };
        SafeguardResult sg = safeguard(draw(0), dyn, cost, draw, options);
        int resamples = 0;
        for (const auto& ev : sg.events) {
          if (ev.kind == SafeguardEvent::Kind::kResample) ++resamples;
          rec.events.push_back(ev);
        }
        if (sg.aborted) {
          rec.status = RunRecord::Status::kAborted;
          rec.abort_reason = "safeguard exhausted its resample budget";
          break;
        }
        EpisodeRecord er;
        er.index = n;
        er.gamma_n = gamma;
        er.theta = sg.estimate.theta;
        er.ls_part = sg.estimate.ls_part;
        er.perturbation = sg.estimate.perturbation;
        er.estimation_error = estimation_error(sg.estimate, dyn);
        er.gain = sg.gain;
        er.resamples = resamples;
        er.noise_statistic = self_normalized_statistic(acc);
        rec.episodes.push_back(std::move(er));
        K = std::move(sg.gain);
        delta = K.K - K_star;
        ++episode;
      }
    }
  } catch (const BlowUpError& e) {
    abort_run(episode, e.what());
  } catch (const Error& e) {
    abort_run(episode, e.what());
  }

  rec.regret = compute_regret(traj_a, traj_o, reached_checkpoints);
  rec.quadratic_term.resize(rec.regret.size());
  rec.state_gram = acc.state_gram();
  rec.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - clock_start)
                         .count();
  return rec;
}

}  // namespace ctlqr
