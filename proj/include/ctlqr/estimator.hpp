#pragma once

#include <cstdint>
#include <random>

#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/sde.hpp"

namespace ctlqr {

/// Randomized estimate [A_hat, B_hat] = ls_part + perturbation.
struct ParameterEstimate {
  Matrix theta;
  int episode_index = 0;
  Matrix ls_part;
  Matrix perturbation;

  Eigen::Index p() const { return theta.rows(); }
  Matrix A() const { return theta.leftCols(theta.rows()); }
  Matrix B() const { return theta.rightCols(theta.cols() - theta.rows()); }
};

/// Least-squares fit C' (V + ridge I)^-1 of [A, B] from the trajectory
/// integrals. With ridge == 0 the Gram matrix must be well conditioned
/// (lambda_min > 1e-12 lambda_max), otherwise RankDeficiencyError.
Matrix least_squares(const EstimatorAccumulators& acc, double ridge = 1e-6);

/// Adds i.i.d. N(0, gamma_n^{-1/2}) entries to the least-squares fit.
ParameterEstimate randomize(const Matrix& ls, double gamma_n,
                            std::mt19937_64& rng, int episode_index = 0);

/// Estimate with an explicit perturbation (zero for the deterministic hook).
ParameterEstimate with_perturbation(const Matrix& ls, const Matrix& perturbation,
                                    int episode_index = 0);

/// |[A_hat, B_hat] - [A, B]|_2.
double estimation_error(const ParameterEstimate& est, const Dynamics& truth);

/// Initial estimate: truth plus N(0, std^2) entries, redrawn until the true
/// plant is stabilized by its certainty-equivalent gain. Throws
/// StabilityError after max_draws failures.
ParameterEstimate initial_estimate(const Dynamics& truth, const CostSpec& cost,
                                   double entry_std, std::mt19937_64& rng,
                                   int max_draws = 100);

/// |(I + V)^{-1/2} noise_cross|_2^2 / (d^2 log lambda_max(V)); the log is
/// floored at 1 so the statistic is defined before V has grown.
double self_normalized_statistic(const EstimatorAccumulators& acc);

}  // namespace ctlqr
