#include "ctlqr/model.hpp"

#include <Eigen/SVD>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

bool symmetric_positive_definite(const Matrix& M) {
  if (M.rows() != M.cols() || M.size() == 0 || !M.allFinite()) return false;
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(M, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0;
}

}  // namespace

Matrix Dynamics::theta() const {
  Matrix t(p(), d());
  t << A, B;
  return t;
}

void Dynamics::check_shapes() const {
  require_square_finite(A, "A");
  require_square_finite(sigma, "sigma");
  if (B.rows() != A.rows() || sigma.rows() != A.rows()) {
    throw DimensionError("A, B and sigma must have p rows");
  }
  if (p() == 0 || q() == 0) throw DimensionError("p and q must be positive");
  if (!B.allFinite()) throw DimensionError("B has non-finite entries");
}

std::pair<Dynamics, CostSpec> airplane_model() {
  Dynamics dyn;
  dyn.A.resize(4, 4);
  dyn.A << -0.185, 0.1475, -0.9825, 0.1120,
           -0.347, -1.710, 0.9029, -0.58e-6,
           1.174, -0.0825, -0.1826, -0.44e-7,
           0.0, 1.0, 0.1429, 0.0;
  dyn.B.resize(4, 2);
  dyn.B << -0.4470e-3, 0.4020e-3,
           0.3715, 0.0549,
           0.0265, -0.0135,
           0.0, 0.0;
  dyn.sigma = 0.2 * Matrix::Identity(4, 4);
  CostSpec cost{Matrix::Identity(4, 4), 0.1 * Matrix::Identity(2, 2)};
  return {dyn, cost};
}

ValidationReport validate(const Dynamics& dyn, const CostSpec& cost) {
  ValidationReport report;
  try {
    dyn.check_shapes();
  } catch (const DimensionError& e) {
    report.failures.emplace_back(std::string("invalid dynamics: ") + e.what());
    return report;
  }

  Eigen::JacobiSVD<Matrix> svd(dyn.sigma);
  const Vector& sv = svd.singularValues();
  const double largest = sv(0);
  report.sigma_min_singular_value = sv(sv.size() - 1);
  const double threshold = 1e-10 * largest;
  report.sigma_rank = (sv.array() > threshold).count();
  report.sigma_full_rank =
      largest > 0.0 && report.sigma_min_singular_value > threshold;
  if (!report.sigma_full_rank) {
    report.failures.emplace_back("noise gain rank-deficient");
  }

  report.q_positive_definite =
      cost.Q.rows() == dyn.p() && symmetric_positive_definite(cost.Q);
  report.r_positive_definite =
      cost.R.rows() == dyn.q() && symmetric_positive_definite(cost.R);
  if (!report.q_positive_definite) {
    report.failures.emplace_back("Q not symmetric positive definite");
  }
  if (!report.r_positive_definite) {
    report.failures.emplace_back("R not symmetric positive definite");
  }

  if (report.q_positive_definite && report.r_positive_definite) {
    try {
      const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
      report.stabilizable = sol.closed_loop_spectral_abscissa < 0.0;
    } catch (const Error&) {
      report.stabilizable = false;
    }
    if (!report.stabilizable) report.failures.emplace_back("unstabilizable");
  }
  return report;
}

Matrix stationary_covariance(const Dynamics& dyn, const Gain& K) {
  const Matrix closed = dyn.A + dyn.B * K.K;
  if (!is_hurwitz(closed)) {
    throw StabilityError("closed loop A + BK is not Hurwitz");
  }
  return solve_lyapunov(closed, dyn.sigma * dyn.sigma.transpose());
}

Dynamics with_theta(const Dynamics& base, const Matrix& theta) {
  if (theta.rows() != base.p() || theta.cols() != base.d()) {
    throw DimensionError("theta must be p x (p+q)");
  }
  Dynamics out = base;
  out.A = theta.leftCols(base.p());
  out.B = theta.rightCols(base.q());
  return out;
}

}  // namespace ctlqr
