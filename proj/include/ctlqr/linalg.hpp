#pragma once

#include <Eigen/Dense>

namespace ctlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Solution of the continuous algebraic Riccati equation
///   A'P + PA - P B R^-1 B' P + Q = 0.
struct RiccatiSolution {
  Matrix P;
  /// Frobenius norm of the Riccati left-hand side evaluated at P.
  double residual = 0.0;
  /// Largest real part of the eigenvalues of A - B R^-1 B' P.
  double closed_loop_spectral_abscissa = 0.0;
};

/// State feedback u = K x, with K of shape q x p.
struct Gain {
  Matrix K;

  Eigen::Index inputs() const { return K.rows(); }
  Eigen::Index states() const { return K.cols(); }
};

/// Throws DimensionError unless M is square with finite entries.
void require_square_finite(const Matrix& M, const char* name);

double spectral_abscissa(const Matrix& M);

/// True iff every eigenvalue of M has real part strictly below -tol_margin.
bool is_hurwitz(const Matrix& M, double tol_margin = 0.0);

/// Solves F X + X F' + W = 0 for symmetric X by Kronecker vectorization.
/// F must be Hurwitz.
Matrix solve_lyapunov(const Matrix& F, const Matrix& W);

/// Frobenius norm of A'P + PA - P B R^-1 B' P + Q.
double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P);

struct CareOptions {
  /// Residual target is tolerance_scale * (1 + |Q|_F).
  double tolerance_scale = 1e-8;
  int max_newton_iterations = 50;
  /// Disable the Hamiltonian Schur path (exercises the Newton-Kleinman
  /// fallback on its own).
  bool use_schur = true;
};

/// Stabilizing solution of the CARE. Uses the ordered Schur form of the
/// Hamiltonian and falls back to Newton-Kleinman iteration.
RiccatiSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q,
                           const Matrix& R, const CareOptions& options = {});

/// K = -R^-1 B' P for the stabilizing CARE solution.
Gain optimal_gain(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R);

/// e^{M t} by scaling and squaring with a diagonal Pade approximant.
Matrix matrix_exponential(const Matrix& M, double t = 1.0);

/// Largest singular value.
double spectral_norm(const Matrix& M);

}  // namespace ctlqr
