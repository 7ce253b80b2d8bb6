#pragma once

#include <span>
#include <vector>

#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/sde.hpp"

namespace ctlqr {

struct RegretCurve {
  std::vector<double> times;
  std::vector<double> regret;
  /// regret[i] / sqrt(times[i]).
  std::vector<double> normalized;

  std::size_t size() const { return times.size(); }
  void push_back(double t, double r);
};

/// Split of the regret of a piecewise-constant gain sequence:
///   quadratic = int |(K_t - K*) x_t|^2 dt
///   cross     = int 2 x_t' E_{T-t} (K_t - K*) x_t dt
struct RegretDecomposition {
  double quadratic_term = 0.0;
  double cross_term = 0.0;
  double L_T() const { return quadratic_term - cross_term; }
};

/// x'Qx + u'Ru.
double instantaneous_cost(const Vector& x, const Vector& u,
                          const CostSpec& cost);

/// R(T) = (adaptive running cost - oracle running cost) at each checkpoint.
/// Both trajectories must carry identical time grids and every checkpoint
/// must be a sample time (within half a sample gap); otherwise
/// GridMismatchError.
RegretCurve compute_regret(const Trajectory& adaptive,
                           const Trajectory& oracle,
                           std::span<const double> checkpoints);

/// Closed loop under the optimal gain of the true plant, sampled at the
/// given record times on the noise grid (the final horizon is always
/// sampled).
Trajectory oracle_run(const Dynamics& dyn, const CostSpec& cost,
                      const Vector& x0, double horizon, const NoisePath& noise,
                      std::span<const double> record_times = {},
                      const SimulationOptions& options = {});

/// E_t = e^{D'^t} P e^{D t} B with D = A + B K* and P the true Riccati
/// solution, tabulated on a geometric grid and linearly interpolated.
/// Past the last node (where |E_t| < 1e-12) E_t is taken as zero.
class EtCache {
 public:
  static constexpr std::size_t kDefaultNodes = 4096;

  EtCache(const Dynamics& dyn, const CostSpec& cost,
          std::size_t nodes = kDefaultNodes);

  Matrix at(double t) const;
  /// Direct evaluation via matrix exponentials.
  Matrix exact(double t) const;

  double horizon() const { return nodes_.back(); }
  std::span<const double> nodes() const { return nodes_; }
  double spectral_abscissa() const { return abscissa_; }
  const Gain& optimal() const { return K_star_; }

  /// Largest |at(t) - exact(t)|_2 over the midpoints of every interval.
  double max_interpolation_error() const;
  /// Largest ratio |E_t| / (|E_0| e^{alpha t / 2}) over the grid.
  double max_decay_ratio() const;

 private:
  Matrix D_;
  Matrix P_;
  Matrix B_;
  Gain K_star_;
  double abscissa_ = 0.0;
  std::vector<double> nodes_;
  std::vector<Matrix> values_;
};

/// Quadrature of the decomposition terms over samples with t < T. gains[i]
/// is the gain applied at sample i; the trajectory should be recorded every
/// step. Throws DimensionError on misalignment.
RegretDecomposition decomposition_check(const Trajectory& adaptive,
                                        std::span<const Gain> gains,
                                        const EtCache& cache, double T);

}  // namespace ctlqr
