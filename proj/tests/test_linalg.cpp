#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "ctlqr/errors.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"

using namespace ctlqr;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols,
                     double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix M(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) M(i, j) = n(rng);
  return M;
}

// Random Hurwitz matrix: shift a random matrix left of its abscissa.
Matrix random_hurwitz(std::mt19937_64& rng, int n) {
  Matrix M = random_matrix(rng, n, n);
  const double shift = spectral_abscissa(M) + 0.5;
  return M - shift * Matrix::Identity(n, n);
}

// Lyapunov oracle: Simpson quadrature of int_0^inf e^{Ft} W e^{F't} dt on a
// truncated horizon, built from matrix exponentials rather than Kronecker
// products.
Matrix lyapunov_by_quadrature(const Matrix& F, const Matrix& W, double T,
                              int intervals) {
  const double h = T / intervals;
  const Matrix step = matrix_exponential(F, h);
  Matrix E = Matrix::Identity(F.rows(), F.cols());
  Matrix sum = Matrix::Zero(F.rows(), F.cols());
  for (int i = 0; i <= intervals; ++i) {
    const double w = (i == 0 || i == intervals) ? 1 : (i % 2 ? 4 : 2);
    sum += w * E * W * E.transpose();
    E = E * step;
  }
  return sum * h / 3.0;
}

// Taylor series of e^X in long double with scaling and squaring; accurate
// reference for moderate norms.
Matrix expm_taylor(const Matrix& X) {
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  LMatrix Y = X.cast<long double>();
  int s = 0;
  while (Y.cwiseAbs().colwise().sum().maxCoeff() > 0.125L) {
    Y /= 2.0L;
    ++s;
  }
  LMatrix term = LMatrix::Identity(X.rows(), X.cols());
  LMatrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * Y / static_cast<long double>(k);
    sum += term;
  }
  for (int i = 0; i < s; ++i) sum = sum * sum;
  return sum.cast<double>();
}

}  // namespace

TEST(IsHurwitz, Examples) {
  EXPECT_TRUE(is_hurwitz(-Matrix::Identity(2, 2)));
  EXPECT_FALSE(is_hurwitz(Matrix::Zero(2, 2)));
  const auto [dyn, cost] = airplane_model();
  const Gain K = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  EXPECT_TRUE(is_hurwitz(dyn.A + dyn.B * K.K));
}

TEST(IsHurwitz, MarginIsStrict) {
  const Matrix M = -0.5 * Matrix::Identity(3, 3);
  EXPECT_TRUE(is_hurwitz(M, 0.4));
  EXPECT_FALSE(is_hurwitz(M, 0.5));
}

TEST(IsHurwitz, RejectsBadInput) {
  EXPECT_THROW(is_hurwitz(Matrix::Zero(2, 3)), DimensionError);
  Matrix M = -Matrix::Identity(2, 2);
  M(0, 1) = std::nan("");
  EXPECT_THROW(is_hurwitz(M), DimensionError);
}

TEST(Lyapunov, ScaledIdentity) {
  const Matrix S1 =
      solve_lyapunov(-Matrix::Identity(2, 2), Matrix::Identity(2, 2));
  EXPECT_LT((S1 - 0.5 * Matrix::Identity(2, 2)).norm(), 1e-14);
  const Matrix S2 =
      solve_lyapunov(-0.5 * Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  EXPECT_LT((S2 - Matrix::Identity(3, 3)).norm(), 1e-14);
}

TEST(Lyapunov, HandSolvedUpperTriangular) {
  Matrix F(2, 2);
  F << -1, 1, 0, -2;
  Matrix expected(2, 2);
  expected << 7.0 / 12.0, 1.0 / 12.0, 1.0 / 12.0, 0.25;
  const Matrix S = solve_lyapunov(F, Matrix::Identity(2, 2));
  EXPECT_LT((S - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lyapunov, MatchesQuadratureOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial % 3;
    const Matrix F = random_hurwitz(rng, n);
    const Matrix G = random_matrix(rng, n, n);
    const Matrix W = G * G.transpose();
    const Matrix S = solve_lyapunov(F, W);
    const double horizon = 60.0 / (-spectral_abscissa(F));
    const Matrix oracle = lyapunov_by_quadrature(F, W, horizon, 20000);
    EXPECT_LT((S - oracle).norm(), 1e-6 * (1.0 + oracle.norm()));
    EXPECT_LE((F * S + S * F.transpose() + W).norm(), 1e-9 * (1 + W.norm()));
    EXPECT_EQ(S, S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Lyapunov, RejectsUnstableOperator) {
  EXPECT_THROW(solve_lyapunov(Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
               StabilityError);
}

TEST(Care, ScalarClosedForm) {
  const RiccatiSolution sol =
      solve_care(scalar(-1), scalar(1), scalar(1), scalar(1));
  EXPECT_NEAR(sol.P(0, 0), std::sqrt(2.0) - 1.0, 1e-12);
  EXPECT_LT(sol.closed_loop_spectral_abscissa, 0.0);
  const Gain K = optimal_gain(scalar(-1), scalar(1), scalar(1), scalar(1));
  EXPECT_NEAR(K.K(0, 0), -(std::sqrt(2.0) - 1.0), 1e-12);
}

TEST(Care, DoubleIntegratorClosedForm) {
  Matrix A(2, 2);
  A << 0, 1, 0, 0;
  Matrix B(2, 1);
  B << 0, 1;
  const RiccatiSolution sol =
      solve_care(A, B, Matrix::Identity(2, 2), scalar(1));
  Matrix expected(2, 2);
  expected << std::sqrt(3.0), 1, 1, std::sqrt(3.0);
  EXPECT_LT((sol.P - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Care, ZeroInputReducesToLyapunov) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    const int p = 2 + trial;
    const Matrix A = random_hurwitz(rng, p);
    const Matrix G = random_matrix(rng, p, p);
    const Matrix Q = G * G.transpose() + Matrix::Identity(p, p);
    const Matrix B = Matrix::Zero(p, 2);
    const RiccatiSolution sol = solve_care(A, B, Q, Matrix::Identity(2, 2));
    const Matrix L = solve_lyapunov(A.transpose(), Q);
    EXPECT_LT((sol.P - L).cwiseAbs().maxCoeff(), 1e-8);
    const Gain K = optimal_gain(A, B, Q, Matrix::Identity(2, 2));
    EXPECT_EQ(K.K.rows(), 2);
    EXPECT_EQ(K.K.cols(), p);
    EXPECT_LT(K.K.cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(Care, AirplaneResidualAndStability) {
  const auto [dyn, cost] = airplane_model();
  const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
  EXPECT_LE(sol.residual, 1e-8 * (1.0 + cost.Q.norm()));
  EXPECT_LE(care_residual(dyn.A, dyn.B, cost.Q, cost.R, sol.P), 1e-8);
  EXPECT_LT(sol.closed_loop_spectral_abscissa, 0.0);
  EXPECT_LT((sol.P - sol.P.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sol.P);
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(Care, SchurAndNewtonKleinmanAgree) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 2 + trial % 4;
    const int q = 1 + trial % 2;
    const Matrix A = random_matrix(rng, p, p);
    const Matrix B = random_matrix(rng, p, q);
    const Matrix Q = Matrix::Identity(p, p);
    const Matrix R = Matrix::Identity(q, q);
    const RiccatiSolution schur = solve_care(A, B, Q, R);
    CareOptions nk_only;
    nk_only.use_schur = false;
    const RiccatiSolution nk = solve_care(A, B, Q, R, nk_only);
    EXPECT_LT((schur.P - nk.P).norm(), 1e-7 * (1 + schur.P.norm()))
        << "trial " << trial;
    const Gain K = optimal_gain(A, B, Q, R);
    EXPECT_TRUE(is_hurwitz(A + B * K.K));
    EXPECT_LE(schur.residual, 1e-8 * (1 + Q.norm()));
  }
}

TEST(Care, UnstabilizablePairIsDetected) {
  EXPECT_THROW(solve_care(Matrix::Identity(2, 2), Matrix::Zero(2, 1),
                          Matrix::Identity(2, 2), scalar(1)),
               StabilizabilityError);
  // Unstable mode x2 is not reachable from the input.
  Matrix A(2, 2);
  A << -1, 0, 0, 0.5;
  Matrix B(2, 1);
  B << 1, 0;
  EXPECT_THROW(solve_care(A, B, Matrix::Identity(2, 2), scalar(1)),
               StabilizabilityError);
}

TEST(Care, RejectsIndefiniteWeights) {
  EXPECT_THROW(solve_care(scalar(-1), scalar(1), scalar(1), scalar(-1)),
               DimensionError);
  EXPECT_THROW(solve_care(scalar(-1), scalar(1), scalar(-1), scalar(1)),
               DimensionError);
}

TEST(Care, GainIsLipschitzAroundAirplane) {
  const auto [dyn, cost] = airplane_model();
  const Matrix theta = dyn.theta();
  const Matrix K0 = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R).K;
  std::mt19937_64 rng(17);
  double max_ratio = 0.0;
  double ratio_small = 0.0, ratio_large = 0.0;
  for (int i = 0; i < 100; ++i) {
    Matrix dir = random_matrix(rng, 4, 6);
    dir /= spectral_norm(dir);
    const double size = std::pow(10.0, -6.0 + 4.0 * (i / 99.0));
    const Matrix t = theta + size * dir;
    const Matrix K = optimal_gain(t.leftCols(4), t.rightCols(2), cost.Q,
                                  cost.R).K;
    const double ratio = spectral_norm(K - K0) / size;
    max_ratio = std::max(max_ratio, ratio);
    if (i == 0) ratio_small = ratio;
    if (i == 99) ratio_large = ratio;
  }
  EXPECT_LT(max_ratio, 1e6);
  const double r = ratio_small / ratio_large;
  EXPECT_GT(r, 0.1);
  EXPECT_LT(r, 10.0);
  RecordProperty("max_lipschitz_ratio", std::to_string(max_ratio));
}

TEST(MatrixExponential, Examples) {
  EXPECT_EQ(matrix_exponential(Matrix::Zero(3, 3), 2.0),
            Matrix::Identity(3, 3));
  Matrix D = Matrix::Zero(2, 2);
  D.diagonal() << -1, -2;
  const Matrix E = matrix_exponential(D, 1.0);
  EXPECT_NEAR(E(0, 0), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(E(1, 1), std::exp(-2.0), 1e-15);
  EXPECT_EQ(E(0, 1), 0.0);
  Matrix N(2, 2);
  N << 0, 1, 0, 0;
  for (double t : {0.1, 1.0, 7.5}) {
    const Matrix En = matrix_exponential(N, t);
    EXPECT_NEAR(En(0, 1), t, 1e-13 * (1 + t));
    EXPECT_NEAR(En(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(En(1, 1), 1.0, 1e-14);
    EXPECT_NEAR(En(1, 0), 0.0, 1e-14);
  }
}

TEST(MatrixExponential, MatchesTaylorReference) {
  std::mt19937_64 rng(23);
  for (double scale : {0.001, 0.05, 0.3, 1.0, 3.0}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix M = random_matrix(rng, 5, 5, scale);
      const Matrix ref = expm_taylor(M);
      EXPECT_LT((matrix_exponential(M) - ref).norm(), 1e-12 * ref.norm())
          << "scale " << scale;
    }
  }
}

TEST(MatrixExponential, LargeNormSymmetric) {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix G = random_matrix(rng, 4, 4);
    Matrix S = G + G.transpose();
    S *= 100.0 / S.cwiseAbs().colwise().sum().maxCoeff();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    const Matrix ref = eig.eigenvectors() *
                       eig.eigenvalues().array().exp().matrix().asDiagonal() *
                       eig.eigenvectors().transpose();
    EXPECT_LT((matrix_exponential(S) - ref).norm(), 1e-10 * ref.norm());
  }
}

TEST(MatrixExponential, Semigroup) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix M = random_hurwitz(rng, 4);
    const double s = 0.3 * (trial + 1), t = 0.7 * trial;
    const Matrix lhs = matrix_exponential(M, s + t);
    const Matrix rhs = matrix_exponential(M, s) * matrix_exponential(M, t);
    EXPECT_LT((lhs - rhs).norm(), 1e-9 * (1 + lhs.norm()));
  }
}
