#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctlqr/linalg.hpp"

namespace ctlqr {

/// dx = (A x + B u) dt + sigma dW, with p states and q inputs.
struct Dynamics {
  Matrix A;
  Matrix B;
  Matrix sigma;

  Eigen::Index p() const { return A.rows(); }
  Eigen::Index q() const { return B.cols(); }
  Eigen::Index d() const { return p() + q(); }

  /// [A, B], p x (p+q).
  Matrix theta() const;
  /// Throws DimensionError on inconsistent shapes or non-finite entries.
  void check_shapes() const;
};

/// Running cost x'Qx + u'Ru.
struct CostSpec {
  Matrix Q;
  Matrix R;
};

struct ValidationReport {
  Eigen::Index sigma_rank = 0;
  double sigma_min_singular_value = 0.0;
  bool sigma_full_rank = false;
  bool stabilizable = false;
  bool q_positive_definite = false;
  bool r_positive_definite = false;
  std::vector<std::string> failures;

  bool pass() const {
    return failures.empty() && sigma_full_rank && stabilizable &&
           q_positive_definite && r_positive_definite;
  }
};

/// Four-state, two-input lateral-directional airplane benchmark with
/// sigma = 0.2 I, Q = I, R = 0.1 I.
std::pair<Dynamics, CostSpec> airplane_model();

/// Checks full-rank noise, stabilizability and positive definite weights.
ValidationReport validate(const Dynamics& dyn, const CostSpec& cost);

/// Solves (A+BK) S + S (A+BK)' + sigma sigma' = 0.
Matrix stationary_covariance(const Dynamics& dyn, const Gain& K);

/// Builds the [A, B] split of a p x (p+q) parameter matrix.
Dynamics with_theta(const Dynamics& base, const Matrix& theta);

}  // namespace ctlqr
