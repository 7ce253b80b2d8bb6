#include "ctlqr/regret.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctlqr/errors.hpp"

namespace ctlqr {

void RegretCurve::push_back(double t, double r) {
  times.push_back(t);
  regret.push_back(r);
  normalized.push_back(r / std::sqrt(t));
}

double instantaneous_cost(const Vector& x, const Vector& u,
                          const CostSpec& cost) {
  if (x.size() != cost.Q.rows() || u.size() != cost.R.rows()) {
    throw DimensionError("cost shape mismatch");
  }
  return x.dot(cost.Q * x) + u.dot(cost.R * u);
}

namespace {

std::size_t find_sample(const std::vector<double>& times, double t) {
  const auto it = std::lower_bound(times.begin(), times.end(), t);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_gap = std::numeric_limits<double>::infinity();
  for (auto cand : {it, it == times.begin() ? it : it - 1}) {
    if (cand == times.end()) continue;
    const double gap = std::abs(*cand - t);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<std::size_t>(cand - times.begin());
    }
  }
  if (best == std::numeric_limits<std::size_t>::max()) {
    throw GridMismatchError("checkpoint outside the trajectory");
  }
  // Tolerance: half the local sample gap, and never more than 1e-9 relative
  // when samples are dense.
  double spacing = std::numeric_limits<double>::infinity();
  if (best + 1 < times.size()) spacing = times[best + 1] - times[best];
  if (best > 0) spacing = std::min(spacing, times[best] - times[best - 1]);
  const double tol = std::isfinite(spacing) ? 0.5 * spacing : 1e-9 * (1 + t);
  if (best_gap > tol) {
    throw GridMismatchError("checkpoint t=" + std::to_string(t) +
                            " is not a sample time");
  }
  return best;
}

}  // namespace

RegretCurve compute_regret(const Trajectory& adaptive,
                           const Trajectory& oracle,
                           std::span<const double> checkpoints) {
  if (adaptive.times != oracle.times) {
    throw GridMismatchError("adaptive and oracle trajectories differ in grid");
  }
  RegretCurve curve;
  for (double T : checkpoints) {
    if (!(T > 0.0)) throw GridMismatchError("checkpoints must be positive");
    const std::size_t i = find_sample(adaptive.times, T);
    curve.push_back(adaptive.times[i],
                    adaptive.running_cost[i] - oracle.running_cost[i]);
  }
  return curve;
}

Trajectory oracle_run(const Dynamics& dyn, const CostSpec& cost,
                      const Vector& x0, double horizon, const NoisePath& noise,
                      std::span<const double> record_times,
                      const SimulationOptions& options) {
  const Gain K = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  const double dt = noise.dt();
  std::vector<std::uint64_t> stops;
  for (double t : record_times) {
    if (t > 0.0 && t < horizon) stops.push_back(steps_for(t, dt));
  }
  stops.push_back(steps_for(horizon, dt));
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  Trajectory traj;
  SegmentState state{x0};
  for (std::uint64_t stop : stops) {
    if (stop <= state.step && !traj.empty()) continue;
    SegmentResult seg = simulate_segment(dyn, cost, K, state,
                                         stop - state.step, noise, nullptr,
                                         options);
    traj.append(seg.trajectory);
    state = seg.end;
  }
  return traj;
}

EtCache::EtCache(const Dynamics& dyn, const CostSpec& cost,
                 std::size_t nodes) {
  if (nodes < 3) throw DimensionError("EtCache needs at least 3 nodes");
  const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
  P_ = sol.P;
  B_ = dyn.B;
  K_star_ = Gain{-cost.R.llt().solve(dyn.B.transpose() * sol.P)};
  D_ = dyn.A + dyn.B * K_star_.K;
  abscissa_ = ctlqr::spectral_abscissa(D_);

  double t_max = 1.0;
  while (spectral_norm(exact(t_max)) >= 1e-12) {
    t_max *= 2.0;
    if (t_max > 1e8) throw NumericalError("E_t does not decay");
  }
  const double t_min = t_max * 1e-9;
  const double ratio =
      std::pow(t_max / t_min, 1.0 / static_cast<double>(nodes - 2));
  nodes_.reserve(nodes);
  nodes_.push_back(0.0);
  double t = t_min;
  for (std::size_t i = 1; i < nodes; ++i) {
    nodes_.push_back(i + 1 == nodes ? t_max : t);
    t *= ratio;
  }
  values_.reserve(nodes);
  for (double node : nodes_) values_.push_back(exact(node));
}

Matrix EtCache::exact(double t) const {
  const Matrix Phi = matrix_exponential(D_, t);
  return Phi.transpose() * P_ * Phi * B_;
}

Matrix EtCache::at(double t) const {
  if (t <= 0.0) return values_.front();
  if (t >= nodes_.back()) return Matrix::Zero(B_.rows(), B_.cols());
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - nodes_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - nodes_[lo]) / (nodes_[hi] - nodes_[lo]);
  return (1.0 - w) * values_[lo] + w * values_[hi];
}

double EtCache::max_interpolation_error() const {
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double mid = 0.5 * (nodes_[i] + nodes_[i + 1]);
    worst = std::max(worst, spectral_norm(at(mid) - exact(mid)));
  }
  return worst;
}

double EtCache::max_decay_ratio() const {
  const double e0 = spectral_norm(values_.front());
  double worst = 0.0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const double bound = e0 * std::exp(abscissa_ * nodes_[i] / 2.0);
    worst = std::max(worst, spectral_norm(values_[i]) / bound);
  }
  return worst;
}

RegretDecomposition decomposition_check(const Trajectory& adaptive,
                                        std::span<const Gain> gains,
                                        const EtCache& cache, double T) {
  if (gains.size() != adaptive.size()) {
    throw DimensionError("gain sequence not aligned with trajectory samples");
  }
  const Matrix& K_star = cache.optimal().K;
  RegretDecomposition out;
  for (std::size_t i = 0; i + 1 < adaptive.size(); ++i) {
    const double t = adaptive.times[i];
    if (t >= T) break;
    const double h = std::min(adaptive.times[i + 1], T) - t;
    const Matrix delta = gains[i].K - K_star;
    if (delta.rows() != K_star.rows() || delta.cols() != K_star.cols()) {
      throw DimensionError("gain shape mismatch");
    }
    const Vector& x = adaptive.states[i];
    const Vector dx = delta * x;
    out.quadratic_term += dx.squaredNorm() * h;
    out.cross_term += 2.0 * x.dot(cache.at(T - t) * dx) * h;
  }
  return out;
}

}  // namespace ctlqr
