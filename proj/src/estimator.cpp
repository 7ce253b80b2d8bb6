#include "ctlqr/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "ctlqr/errors.hpp"

namespace ctlqr {

Matrix least_squares(const EstimatorAccumulators& acc, double ridge) {
  if (!(acc.elapsed > 0.0)) {
    throw DimensionError("least squares needs a positive observation time");
  }
  if (ridge < 0.0) throw DimensionError("ridge must be non-negative");
  const Eigen::Index d = acc.V.rows();
  if (ridge == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(acc.V, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmin > 1e-12 * lmax)) {
      throw RankDeficiencyError("state-input Gram matrix is singular", lmin);
    }
  }
  const Matrix G = acc.V + ridge * Matrix::Identity(d, d);
  Eigen::LDLT<Matrix> ldlt(G);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("Gram factorization failed");
  }
  // theta' = G^-1 C
  return ldlt.solve(acc.C).transpose();
}

ParameterEstimate with_perturbation(const Matrix& ls,
                                    const Matrix& perturbation,
                                    int episode_index) {
  if (ls.rows() != perturbation.rows() || ls.cols() != perturbation.cols()) {
    throw DimensionError("perturbation shape mismatch");
  }
  return ParameterEstimate{ls + perturbation, episode_index, ls, perturbation};
}

ParameterEstimate randomize(const Matrix& ls, double gamma_n,
                            std::mt19937_64& rng, int episode_index) {
  if (!(gamma_n > 0.0)) throw DimensionError("gamma_n must be positive");
  std::normal_distribution<double> normal(0.0, std::pow(gamma_n, -0.25));
  Matrix perturbation(ls.rows(), ls.cols());
  for (Eigen::Index j = 0; j < ls.cols(); ++j) {
    for (Eigen::Index i = 0; i < ls.rows(); ++i) perturbation(i, j) = normal(rng);
  }
  return with_perturbation(ls, perturbation, episode_index);
}

double estimation_error(const ParameterEstimate& est, const Dynamics& truth) {
  const Matrix theta = truth.theta();
  if (est.theta.rows() != theta.rows() || est.theta.cols() != theta.cols()) {
    throw DimensionError("estimate shape does not match the dynamics");
  }
  return spectral_norm(est.theta - theta);
}

ParameterEstimate initial_estimate(const Dynamics& truth, const CostSpec& cost,
                                   double entry_std, std::mt19937_64& rng,
                                   int max_draws) {
  const Matrix theta = truth.theta();
  std::normal_distribution<double> normal(0.0, entry_std);
  for (int draw = 0; draw < max_draws; ++draw) {
    Matrix perturbation(theta.rows(), theta.cols());
    for (Eigen::Index j = 0; j < theta.cols(); ++j) {
      for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        perturbation(i, j) = entry_std > 0.0 ? normal(rng) : 0.0;
      }
    }
    ParameterEstimate est = with_perturbation(theta, perturbation, 0);
    try {
      const Gain K = optimal_gain(est.A(), est.B(), cost.Q, cost.R);
      if (is_hurwitz(truth.A + truth.B * K.K)) return est;
    } catch (const Error&) {
    }
  }
  throw StabilityError("no stabilizing initial estimate after " +
                       std::to_string(max_draws) + " draws");
}

double self_normalized_statistic(const EstimatorAccumulators& acc) {
  const Eigen::Index d = acc.V.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(acc.V +
                                            Matrix::Identity(d, d));
  const Matrix normalized = eig.operatorInverseSqrt() * acc.noise_cross;
  const double lmax = eig.eigenvalues().maxCoeff() - 1.0;
  const double log_term = std::max(std::log(std::max(lmax, 1.0)), 1.0);
  const double n = spectral_norm(normalized);
  return n * n / (static_cast<double>(d * d) * log_term);
}

}  // namespace ctlqr
