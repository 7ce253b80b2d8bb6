#include "ctlqr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

double one_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  return M.cwiseAbs().colwise().sum().maxCoeff();
}

Matrix symmetrize(const Matrix& M) { return 0.5 * (M + M.transpose()); }

void require_symmetric(const Matrix& M, const char* name, double tol) {
  const double scale = 1.0 + M.cwiseAbs().maxCoeff();
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw DimensionError(std::string(name) + " is not symmetric");
  }
}

// Swaps the adjacent diagonal entries k, k+1 of the upper-triangular T with
// a unitary rotation, updating the Schur vectors in U.
void swap_schur_pair(ComplexMatrix& T, ComplexMatrix& U, Eigen::Index k) {
  const Complex a = T(k, k);
  const Complex b = T(k + 1, k + 1);
  const Complex t = T(k, k + 1);
  Complex v1 = t;
  Complex v2 = b - a;
  const double nv = std::sqrt(std::norm(v1) + std::norm(v2));
  if (nv == 0.0) return;
  v1 /= nv;
  v2 /= nv;
  Eigen::Matrix2cd G;
  G << v1, -std::conj(v2), v2, std::conj(v1);
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = 0.0;
  T(k, k) = b;
  T(k + 1, k + 1) = a;
}

// Stable invariant subspace of the Hamiltonian; nullopt when the subspace
// does not have the right dimension or does not yield a graph basis.
std::optional<Matrix> care_schur(const Matrix& A, const Matrix& G,
                                 const Matrix& Q) {
  const Eigen::Index p = A.rows();
  Matrix H(2 * p, 2 * p);
  H << A, -G, -Q, -A.transpose();

  Eigen::ComplexSchur<Matrix> schur(H);
  if (schur.info() != Eigen::Success) return std::nullopt;
  ComplexMatrix T = schur.matrixT();
  ComplexMatrix U = schur.matrixU();

  const double imag_axis_tol = 1e-10 * (1.0 + one_norm(H));
  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < 2 * p; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) <= imag_axis_tol) return std::nullopt;
    if (re < 0.0) ++stable;
  }
  if (stable != p) return std::nullopt;

  // Bubble the stable eigenvalues to the leading block.
  Eigen::Index front = 0;
  for (Eigen::Index i = 0; i < 2 * p; ++i) {
    if (T(i, i).real() < 0.0) {
      for (Eigen::Index j = i; j > front; --j) swap_schur_pair(T, U, j - 1);
      ++front;
    }
  }

  const ComplexMatrix U1 = U.topLeftCorner(p, p);
  const ComplexMatrix U2 = U.bottomLeftCorner(p, p);
  Eigen::JacobiSVD<ComplexMatrix> svd(U1);
  const auto& sv = svd.singularValues();
  if (sv(p - 1) <= 1e-12 * sv(0)) return std::nullopt;

  // P = U2 U1^-1  <=>  U1' P' = U2'
  const ComplexMatrix Pc =
      U1.transpose().fullPivLu().solve(U2.transpose()).transpose();
  return symmetrize(Pc.real());
}

Matrix gain_from_riccati(const Eigen::LLT<Matrix>& R_llt, const Matrix& B,
                         const Matrix& P) {
  return -R_llt.solve(B.transpose() * P);
}

// Bass' construction: stabilizing for controllable pairs.
std::optional<Matrix> bass_gain(const Matrix& A, const Matrix& B) {
  const Eigen::Index p = A.rows();
  const double beta = one_norm(A) + 1.0;
  const Matrix shifted = -(A + beta * Matrix::Identity(p, p));
  try {
    const Matrix Z = solve_lyapunov(shifted, 2.0 * B * B.transpose());
    Eigen::FullPivLU<Matrix> lu(Z);
    if (!lu.isInvertible()) return std::nullopt;
    Matrix K = -B.transpose() * lu.inverse();
    if (!is_hurwitz(A + B * K)) return std::nullopt;
    return K;
  } catch (const Error&) {
    return std::nullopt;
  }
}

Matrix newton_kleinman(const Matrix& A, const Matrix& B, const Matrix& Q,
                       const Matrix& R, const Eigen::LLT<Matrix>& R_llt,
                       Matrix K, double tol, int max_iterations) {
  double residual = std::numeric_limits<double>::infinity();
  Matrix P;
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix closed = A + B * K;
    if (!is_hurwitz(closed)) {
      throw ConvergenceError("Newton-Kleinman lost closed-loop stability",
                             residual);
    }
    P = symmetrize(solve_lyapunov(closed.transpose(),
                                  Q + K.transpose() * R * K));
    K = gain_from_riccati(R_llt, B, P);
    residual = care_residual(A, B, Q, R, P);
    if (!std::isfinite(residual)) break;
    if (residual <= tol) return P;
  }
  throw ConvergenceError("Newton-Kleinman did not converge", residual);
}

// Diagonal Pade approximant coefficients (Higham 2005).
constexpr std::array<double, 4> kPade3 = {120.0, 60.0, 12.0, 1.0};
constexpr std::array<double, 6> kPade5 = {30240.0, 15120.0, 3360.0,
                                          420.0,   30.0,    1.0};
constexpr std::array<double, 8> kPade7 = {17297280.0, 8648640.0, 1995840.0,
                                          277200.0,   25200.0,   1512.0,
                                          56.0,       1.0};
constexpr std::array<double, 10> kPade9 = {
    17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
    2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

template <std::size_t N>
Matrix pade_low(const Matrix& X, const std::array<double, N>& c) {
  const Eigen::Index n = X.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix X2 = X * X;
  Matrix even = c[0] * I;
  Matrix odd = c[1] * I;
  Matrix power = I;
  for (std::size_t k = 2; k + 1 < N + 1; k += 2) {
    power = power * X2;
    even += c[k] * power;
    if (k + 1 < N) odd += c[k + 1] * power;
  }
  const Matrix Uo = X * odd;
  return (even - Uo).partialPivLu().solve(even + Uo);
}

Matrix pade13(const Matrix& X) {
  const auto& b = kPade13;
  const Eigen::Index n = X.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix X2 = X * X;
  const Matrix X4 = X2 * X2;
  const Matrix X6 = X4 * X2;
  const Matrix Uo =
      X * (X6 * (b[13] * X6 + b[11] * X4 + b[9] * X2) + b[7] * X6 +
           b[5] * X4 + b[3] * X2 + b[1] * I);
  const Matrix Ve = X6 * (b[12] * X6 + b[10] * X4 + b[8] * X2) + b[6] * X6 +
                    b[4] * X4 + b[2] * X2 + b[0] * I;
  return (Ve - Uo).partialPivLu().solve(Ve + Uo);
}

}  // namespace

void require_square_finite(const Matrix& M, const char* name) {
  if (M.rows() != M.cols()) {
    throw DimensionError(std::string(name) + " must be square, got " +
                         std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()));
  }
  if (!M.allFinite()) {
    throw DimensionError(std::string(name) + " has non-finite entries");
  }
}

double spectral_abscissa(const Matrix& M) {
  require_square_finite(M, "matrix");
  if (M.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(M, false);
  if (es.info() != Eigen::Success) {
    throw NumericalError("eigenvalue computation failed");
  }
  return es.eigenvalues().real().maxCoeff();
}

bool is_hurwitz(const Matrix& M, double tol_margin) {
  return spectral_abscissa(M) < -tol_margin;
}

Matrix solve_lyapunov(const Matrix& F, const Matrix& W) {
  require_square_finite(F, "F");
  require_square_finite(W, "W");
  if (F.rows() != W.rows()) {
    throw DimensionError("F and W must have the same size");
  }
  if (!is_hurwitz(F)) throw StabilityError("Lyapunov operator F is not Hurwitz");

  const Eigen::Index n = F.rows();
  const Eigen::Index n2 = n * n;
  // vec(F X + X F') = (I kron F + F kron I) vec(X), column-major vec.
  Matrix L = Matrix::Zero(n2, n2);
  for (Eigen::Index j = 0; j < n; ++j) {
    L.block(j * n, j * n, n, n) += F;
    for (Eigen::Index i = 0; i < n; ++i) {
      L.block(i * n, j * n, n, n).diagonal().array() += F(i, j);
    }
  }
  const Vector rhs = -Eigen::Map<const Vector>(W.data(), n2);
  Eigen::FullPivLU<Matrix> lu(L);
  if (!lu.isInvertible()) {
    throw NumericalError("Kronecker Lyapunov system is singular");
  }
  const Vector x = lu.solve(rhs);
  const Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return symmetrize(X);
}

double care_residual(const Matrix& A, const Matrix& B, const Matrix& Q,
                     const Matrix& R, const Matrix& P) {
  const Matrix BtP = B.transpose() * P;
  const Matrix lhs = A.transpose() * P + P * A -
                     BtP.transpose() * R.llt().solve(BtP) + Q;
  return lhs.norm();
}

RiccatiSolution solve_care(const Matrix& A, const Matrix& B, const Matrix& Q,
                           const Matrix& R, const CareOptions& options) {
  require_square_finite(A, "A");
  require_square_finite(Q, "Q");
  require_square_finite(R, "R");
  const Eigen::Index p = A.rows();
  if (B.rows() != p || Q.rows() != p || R.rows() != B.cols()) {
    throw DimensionError("inconsistent CARE dimensions");
  }
  if (!B.allFinite()) throw DimensionError("B has non-finite entries");
  require_symmetric(Q, "Q", 1e-12);
  require_symmetric(R, "R", 1e-12);
  Eigen::LLT<Matrix> R_llt(R);
  if (R_llt.info() != Eigen::Success) {
    throw DimensionError("R is not positive definite");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> q_eig(Q, Eigen::EigenvaluesOnly);
  if (q_eig.eigenvalues().minCoeff() < 0.0) {
    throw DimensionError("Q is not positive semidefinite");
  }

  const double tol = options.tolerance_scale * (1.0 + Q.norm());
  const Matrix G = B * R_llt.solve(B.transpose());

  auto finish = [&](Matrix P) -> std::optional<RiccatiSolution> {
    P = symmetrize(P);
    const Matrix closed = A - G * P;
    const double abscissa = spectral_abscissa(closed);
    if (!(abscissa < 0.0)) return std::nullopt;
    const double residual = care_residual(A, B, Q, R, P);
    return RiccatiSolution{std::move(P), residual, abscissa};
  };

  std::optional<Matrix> seed_gain;
  if (options.use_schur) {
    if (auto P = care_schur(A, G, Q)) {
      if (auto sol = finish(*P)) {
        if (sol->residual <= tol) return *sol;
        seed_gain = gain_from_riccati(R_llt, B, sol->P);
      }
    }
  }

  if (!seed_gain) {
    if (is_hurwitz(A)) {
      seed_gain = Matrix::Zero(B.cols(), p);
    } else {
      seed_gain = bass_gain(A, B);
    }
  }
  if (!seed_gain) {
    throw StabilizabilityError(
        "no stabilizing Riccati solution: stable subspace extraction failed "
        "and no stabilizing seed gain exists");
  }
  const Matrix P = newton_kleinman(A, B, Q, R, R_llt, *seed_gain, tol,
                                   options.max_newton_iterations);
  auto sol = finish(P);
  if (!sol) {
    throw StabilizabilityError("Riccati solution is not stabilizing");
  }
  return *sol;
}

Gain optimal_gain(const Matrix& A, const Matrix& B, const Matrix& Q,
                  const Matrix& R) {
  const RiccatiSolution sol = solve_care(A, B, Q, R);
  return Gain{-R.llt().solve(B.transpose() * sol.P)};
}

Matrix matrix_exponential(const Matrix& M, double t) {
  require_square_finite(M, "M");
  if (!std::isfinite(t)) throw DimensionError("time must be finite");
  const Eigen::Index n = M.rows();
  if (n == 0) return M;
  const Matrix X = M * t;
  const double norm = one_norm(X);
  if (norm <= 1.495585217958292e-2) return pade_low(X, kPade3);
  if (norm <= 2.539398330063230e-1) return pade_low(X, kPade5);
  if (norm <= 9.504178996162932e-1) return pade_low(X, kPade7);
  if (norm <= 2.097847961257068e0) return pade_low(X, kPade9);
  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  }
  Matrix E = pade13(X / std::ldexp(1.0, squarings));
  for (int i = 0; i < squarings; ++i) E = E * E;
  return E;
}

double spectral_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

}  // namespace ctlqr
