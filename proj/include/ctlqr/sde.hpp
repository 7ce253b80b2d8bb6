#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/noise.hpp"
#include "ctlqr/parallel.hpp"

namespace ctlqr {

/// Streaming Ito integrals over the whole trajectory, z = [x; u]:
///   V = int z z' ds,  C = int z dx'.
/// noise_cross = int z dW' uses the true Brownian increments; it feeds the
/// self-normalized diagnostic only and is never read by the estimator.
struct EstimatorAccumulators {
  Matrix V;
  Matrix C;
  Matrix noise_cross;
  double elapsed = 0.0;

  static EstimatorAccumulators zeros(Eigen::Index p, Eigen::Index q);

  Eigen::Index d() const { return V.rows(); }
  Eigen::Index p() const { return C.cols(); }
  /// int x x' ds, the leading p x p block of V.
  Matrix state_gram() const { return V.topLeftCorner(p(), p()); }
};

/// Sampled closed-loop path. running_cost is int_0^t (x'Qx + u'Ru) ds.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> inputs;
  std::vector<double> running_cost;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  /// Appends other, dropping its first sample when it repeats our last one.
  void append(const Trajectory& other);
};

/// Position of a simulation on the global step grid.
struct SegmentState {
  Vector x;
  std::uint64_t step = 0;
  double running_cost = 0.0;
};

struct SimulationOptions {
  /// Record every `record_stride` steps; 0 records the endpoints only.
  std::size_t record_stride = 1;
  double blow_up_threshold = 1e6;
};

struct SegmentResult {
  Trajectory trajectory;
  SegmentState end;
};

/// Euler-Maruyama over `steps` steps of size noise.dt() under u = K x:
///   x_{k+1} = x_k + (A x_k + B u_k) dt + sigma dW_k
/// with left-endpoint quadrature for the running cost and the accumulators.
/// acc may be null when the estimator integrals are not needed.
/// Throws BlowUpError once |x| exceeds the blow-up threshold.
SegmentResult simulate_segment(const Dynamics& dyn, const CostSpec& cost,
                               const Gain& K, const SegmentState& start,
                               std::uint64_t steps, const NoisePath& noise,
                               EstimatorAccumulators* acc,
                               const SimulationOptions& options = {});

/// Same, with the duration rounded to the nearest whole step.
SegmentResult simulate_segment(const Dynamics& dyn, const CostSpec& cost,
                               const Gain& K, const SegmentState& start,
                               double duration, const NoisePath& noise,
                               EstimatorAccumulators* acc,
                               const SimulationOptions& options = {});

std::uint64_t steps_for(double duration, double dt);

struct Moments {
  Vector mean;
  Matrix cov;
};

/// Exact mean and covariance of x_t under u = K x from a deterministic x0.
/// Uses the Lyapunov-difference identity for Hurwitz closed loops and
/// quadrature otherwise.
Moments closed_form_moments(const Dynamics& dyn, const Gain& K,
                            const Vector& x0, double t);

/// Covariance integral by composite Simpson quadrature with `intervals`
/// (even) panels, irrespective of stability.
Matrix covariance_by_quadrature(const Dynamics& dyn, const Gain& K, double t,
                                std::size_t intervals = 2000);

/// Monte Carlo estimate of the moments of x_t with per-entry standard
/// errors. Replicate i uses NoisePath(base_seed + i, dt, p).
struct EnsembleMoments {
  Moments sample;
  Vector mean_stderr;
  Matrix cov_stderr;
  std::size_t replicates = 0;
};

EnsembleMoments ensemble_moments(const Dynamics& dyn, const Gain& K,
                                 const Vector& x0, double t, double dt,
                                 std::size_t replicates,
                                 std::uint64_t base_seed,
                                 Execution execution = Execution::kParallel);

}  // namespace ctlqr
