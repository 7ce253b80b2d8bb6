#include "ctlqr/sde.hpp"

#include <cmath>
#include <span>

#include "ctlqr/errors.hpp"

namespace ctlqr {

EstimatorAccumulators EstimatorAccumulators::zeros(Eigen::Index p,
                                                   Eigen::Index q) {
  EstimatorAccumulators acc;
  acc.V = Matrix::Zero(p + q, p + q);
  acc.C = Matrix::Zero(p + q, p);
  acc.noise_cross = Matrix::Zero(p + q, p);
  return acc;
}

void Trajectory::append(const Trajectory& other) {
  std::size_t first = 0;
  if (!empty() && !other.empty() && other.times.front() == times.back()) {
    first = 1;
  }
  for (std::size_t i = first; i < other.size(); ++i) {
    times.push_back(other.times[i]);
    states.push_back(other.states[i]);
    inputs.push_back(other.inputs[i]);
    running_cost.push_back(other.running_cost[i]);
  }
}

std::uint64_t steps_for(double duration, double dt) {
  if (!(dt > 0.0)) throw DimensionError("dt must be positive");
  if (duration < 0.0 || !std::isfinite(duration)) {
    throw DimensionError("duration must be finite and non-negative");
  }
  return static_cast<std::uint64_t>(std::llround(duration / dt));
}

SegmentResult simulate_segment(const Dynamics& dyn, const CostSpec& cost,
                               const Gain& K, const SegmentState& start,
                               double duration, const NoisePath& noise,
                               EstimatorAccumulators* acc,
                               const SimulationOptions& options) {
  return simulate_segment(dyn, cost, K, start, steps_for(duration, noise.dt()),
                          noise, acc, options);
}

SegmentResult simulate_segment(const Dynamics& dyn, const CostSpec& cost,
                               const Gain& K, const SegmentState& start,
                               std::uint64_t steps, const NoisePath& noise,
                               EstimatorAccumulators* acc,
                               const SimulationOptions& options) {
  const Eigen::Index p = dyn.p();
  const Eigen::Index q = dyn.q();
  const Eigen::Index d = p + q;
  if (K.K.rows() != q || K.K.cols() != p) {
    throw DimensionError("gain must be q x p");
  }
  if (start.x.size() != p) throw DimensionError("x0 must have p entries");
  if (static_cast<Eigen::Index>(noise.dim()) != p) {
    throw DimensionError("noise dimension must equal p");
  }
  if (cost.Q.rows() != p || cost.R.rows() != q) {
    throw DimensionError("cost weights do not match the dynamics");
  }
  if (acc && (acc->V.rows() != d || acc->C.cols() != p)) {
    throw DimensionError("accumulators do not match the dynamics");
  }

  const double dt = noise.dt();
  const double threshold_sq =
      options.blow_up_threshold * options.blow_up_threshold;
  const Matrix& A = dyn.A;
  const Matrix& B = dyn.B;
  const Matrix& S = dyn.sigma;
  const Matrix& Kmat = K.K;
  const Matrix& Q = cost.Q;
  const Matrix& R = cost.R;

  Vector x = start.x;
  Vector u(q), z(d), w(p), dx(p);
  double running = start.running_cost;

  SegmentResult result;
  Trajectory& traj = result.trajectory;
  auto record = [&](std::uint64_t step) {
    traj.times.push_back(static_cast<double>(step) * dt);
    traj.states.push_back(x);
    traj.inputs.push_back(Kmat * x);
    traj.running_cost.push_back(running);
  };
  record(start.step);

  for (std::uint64_t s = 0; s < steps; ++s) {
    const std::uint64_t k = start.step + s;
    for (Eigen::Index i = 0; i < q; ++i) {
      double v = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) v += Kmat(i, j) * x(j);
      u(i) = v;
    }
    double rate = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double v = 0.0;
      for (Eigen::Index i = 0; i < p; ++i) v += Q(i, j) * x(i);
      rate += v * x(j);
    }
    for (Eigen::Index j = 0; j < q; ++j) {
      double v = 0.0;
      for (Eigen::Index i = 0; i < q; ++i) v += R(i, j) * u(i);
      rate += v * u(j);
    }
    noise.increment(k, std::span<double>(w.data(), static_cast<std::size_t>(p)));
    for (Eigen::Index i = 0; i < p; ++i) {
      double drift = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) drift += A(i, j) * x(j);
      for (Eigen::Index j = 0; j < q; ++j) drift += B(i, j) * u(j);
      double diffusion = 0.0;
      for (Eigen::Index j = 0; j < p; ++j) diffusion += S(i, j) * w(j);
      dx(i) = drift * dt + diffusion;
    }
    if (acc) {
      z.head(p) = x;
      z.tail(q) = u;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double zj_dt = z(j) * dt;
        for (Eigen::Index i = 0; i < d; ++i) acc->V(i, j) += z(i) * zj_dt;
      }
      for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < d; ++i) {
          acc->C(i, j) += z(i) * dx(j);
          acc->noise_cross(i, j) += z(i) * w(j);
        }
      }
    }
    running += rate * dt;
    double norm_sq = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
      x(i) += dx(i);
      norm_sq += x(i) * x(i);
    }
    if (!(norm_sq <= threshold_sq)) {
      throw BlowUpError(static_cast<double>(k + 1) * dt, std::sqrt(norm_sq));
    }
    const std::uint64_t done = s + 1;
    if (options.record_stride > 0 && done % options.record_stride == 0 &&
        done != steps) {
      record(k + 1);
    }
  }
  if (steps > 0) record(start.step + steps);
  if (acc) acc->elapsed += static_cast<double>(steps) * dt;

  result.end = SegmentState{x, start.step + steps, running};
  return result;
}

Matrix covariance_by_quadrature(const Dynamics& dyn, const Gain& K, double t,
                                std::size_t intervals) {
  if (intervals < 2) intervals = 2;
  if (intervals % 2 == 1) ++intervals;
  const Eigen::Index p = dyn.p();
  const Matrix W = dyn.sigma * dyn.sigma.transpose();
  if (t <= 0.0) return Matrix::Zero(p, p);
  const Matrix M = dyn.A + dyn.B * K.K;
  const double h = t / static_cast<double>(intervals);
  const Matrix step = matrix_exponential(M, h);
  Matrix E = Matrix::Identity(p, p);
  Matrix sum = Matrix::Zero(p, p);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double weight =
        (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += weight * (E * W * E.transpose());
    E = E * step;
  }
  const Matrix cov = sum * (h / 3.0);
  return 0.5 * (cov + cov.transpose());
}

Moments closed_form_moments(const Dynamics& dyn, const Gain& K,
                            const Vector& x0, double t) {
  if (t < 0.0) throw DimensionError("t must be non-negative");
  const Eigen::Index p = dyn.p();
  if (x0.size() != p) throw DimensionError("x0 must have p entries");
  const Matrix M = dyn.A + dyn.B * K.K;
  const Matrix Phi = matrix_exponential(M, t);
  Moments out;
  out.mean = Phi * x0;
  if (t == 0.0) {
    out.cov = Matrix::Zero(p, p);
  } else if (is_hurwitz(M)) {
    const Matrix Sinf = solve_lyapunov(M, dyn.sigma * dyn.sigma.transpose());
    const Matrix cov = Sinf - Phi * Sinf * Phi.transpose();
    out.cov = 0.5 * (cov + cov.transpose());
  } else {
    out.cov = covariance_by_quadrature(dyn, K, t, 4000);
  }
  return out;
}

EnsembleMoments ensemble_moments(const Dynamics& dyn, const Gain& K,
                                 const Vector& x0, double t, double dt,
                                 std::size_t replicates,
                                 std::uint64_t base_seed,
                                 Execution execution) {
  if (replicates < 2) throw DimensionError("need at least two replicates");
  const Eigen::Index p = dyn.p();
  const std::uint64_t steps = steps_for(t, dt);
  const CostSpec cost{Matrix::Identity(p, p),
                      Matrix::Identity(dyn.q(), dyn.q())};
  SimulationOptions options;
  options.record_stride = 0;
  options.blow_up_threshold = std::numeric_limits<double>::infinity();

  Matrix finals(p, static_cast<Eigen::Index>(replicates));
  auto run_one = [&](std::size_t i) {
    const NoisePath noise(base_seed + i, dt, static_cast<std::size_t>(p));
    const SegmentResult r = simulate_segment(dyn, cost, K, SegmentState{x0},
                                             steps, noise, nullptr, options);
    finals.col(static_cast<Eigen::Index>(i)) = r.end.x;
  };
  const auto n = static_cast<std::int64_t>(replicates);
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(static) num_threads(worker_count())
    for (std::int64_t i = 0; i < n; ++i) run_one(static_cast<std::size_t>(i));
  } else {
    for (std::int64_t i = 0; i < n; ++i) run_one(static_cast<std::size_t>(i));
  }

  const double N = static_cast<double>(replicates);
  EnsembleMoments out;
  out.replicates = replicates;
  out.sample.mean = finals.rowwise().mean();
  const Matrix centered = finals.colwise() - out.sample.mean;
  out.sample.cov = centered * centered.transpose() / (N - 1.0);
  out.mean_stderr = (out.sample.cov.diagonal() / N).cwiseSqrt();
  out.cov_stderr.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      const Eigen::ArrayXd prod =
          centered.row(i).array() * centered.row(j).array();
      const double m = prod.mean();
      const double var = (prod - m).square().sum() / (N - 1.0);
      out.cov_stderr(i, j) = std::sqrt(var / N);
    }
  }
  return out;
}

}  // namespace ctlqr
