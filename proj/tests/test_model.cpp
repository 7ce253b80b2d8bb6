#include <gtest/gtest.h>

#include <random>

#include "ctlqr/errors.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"

using namespace ctlqr;

namespace {

Dynamics scalar_system(double a, double b, double s) {
  return {Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, b),
          Matrix::Constant(1, 1, s)};
}

CostSpec unit_cost(int p, int q) {
  return {Matrix::Identity(p, p), Matrix::Identity(q, q)};
}

}  // namespace

TEST(Airplane, Constants) {
  const auto [dyn, cost] = airplane_model();
  ASSERT_EQ(dyn.p(), 4);
  ASSERT_EQ(dyn.q(), 2);
  const double A[4][4] = {{-0.185, 0.1475, -0.9825, 0.1120},
                          {-0.347, -1.710, 0.9029, -0.58e-6},
                          {1.174, -0.0825, -0.1826, -0.44e-7},
                          {0.0, 1.0, 0.1429, 0.0}};
  const double B[4][2] = {{-0.4470e-3, 0.4020e-3},
                          {0.3715, 0.0549},
                          {0.0265, -0.0135},
                          {0.0, 0.0}};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) EXPECT_EQ(dyn.A(i, j), A[i][j]);
    for (int j = 0; j < 2; ++j) EXPECT_EQ(dyn.B(i, j), B[i][j]);
  }
  EXPECT_EQ(dyn.sigma, 0.2 * Matrix::Identity(4, 4));
  EXPECT_EQ(cost.Q, Matrix::Identity(4, 4));
  EXPECT_EQ(cost.R, 0.1 * Matrix::Identity(2, 2));
  const Matrix theta = dyn.theta();
  EXPECT_EQ(theta.leftCols(4), dyn.A);
  EXPECT_EQ(theta.rightCols(2), dyn.B);
}

TEST(Validate, AirplanePasses) {
  const auto [dyn, cost] = airplane_model();
  const ValidationReport r = validate(dyn, cost);
  EXPECT_TRUE(r.pass());
  EXPECT_EQ(r.sigma_rank, 4);
  EXPECT_NEAR(r.sigma_min_singular_value, 0.2, 1e-15);
}

TEST(Validate, ZeroNoiseIsRankDeficient) {
  Dynamics dyn = scalar_system(-1, 1, 0);
  const ValidationReport r = validate(dyn, unit_cost(1, 1));
  EXPECT_FALSE(r.pass());
  EXPECT_FALSE(r.sigma_full_rank);
  ASSERT_FALSE(r.failures.empty());
  EXPECT_NE(r.failures.front().find("noise gain rank-deficient"),
            std::string::npos);
}

TEST(Validate, SingularNoiseGain) {
  Dynamics dyn{-Matrix::Identity(2, 2), Matrix::Identity(2, 1),
               Matrix::Zero(2, 2)};
  dyn.sigma(0, 0) = 1.0;
  const ValidationReport r = validate(dyn, unit_cost(2, 1));
  EXPECT_EQ(r.sigma_rank, 1);
  EXPECT_FALSE(r.pass());
}

TEST(Validate, Unstabilizable) {
  Dynamics dyn{Matrix::Identity(2, 2), Matrix::Zero(2, 1),
               Matrix::Identity(2, 2)};
  const ValidationReport r = validate(dyn, unit_cost(2, 1));
  EXPECT_FALSE(r.stabilizable);
  bool found = false;
  for (const auto& f : r.failures) found |= f.find("unstabilizable") != std::string::npos;
  EXPECT_TRUE(found);
}

TEST(Validate, StableOpenLoopWithoutInputIsStabilizable) {
  Dynamics dyn{-Matrix::Identity(2, 2), Matrix::Zero(2, 1),
               Matrix::Identity(2, 2)};
  EXPECT_TRUE(validate(dyn, unit_cost(2, 1)).pass());
}

TEST(Validate, IndefiniteWeights) {
  CostSpec cost = unit_cost(1, 1);
  cost.R(0, 0) = 0.0;
  const ValidationReport r = validate(scalar_system(-1, 1, 1), cost);
  EXPECT_FALSE(r.r_positive_definite);
  EXPECT_FALSE(r.pass());
}

TEST(Validate, BadShapesAreReportedNotThrown) {
  Dynamics dyn{Matrix::Identity(2, 2), Matrix::Zero(3, 1),
               Matrix::Identity(2, 2)};
  const ValidationReport r = validate(dyn, unit_cost(2, 1));
  EXPECT_FALSE(r.pass());
  EXPECT_THROW(dyn.check_shapes(), DimensionError);
}

TEST(StationaryCovariance, Examples) {
  const Gain zero{Matrix::Zero(1, 1)};
  // a = -1, sigma = 1: S = 1/2.
  EXPECT_NEAR(stationary_covariance(scalar_system(-1, 1, 1), zero)(0, 0),
              0.5, 1e-15);
  const Gain K{Matrix::Constant(1, 1, -2.0)};
  // a + bk = -1, sigma^2 = 4: S = 2.
  EXPECT_NEAR(stationary_covariance(scalar_system(1, 1, 2), K)(0, 0), 2.0,
              1e-14);
  EXPECT_THROW(stationary_covariance(scalar_system(1, 1, 1), zero),
               StabilityError);
}

TEST(StationaryCovariance, RandomStableSystemsArePositiveDefinite) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    const int p = 2 + trial % 3;
    Dynamics dyn{Matrix(p, p), Matrix(p, 1), Matrix(p, p)};
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        dyn.A(i, j) = n(rng);
        dyn.sigma(i, j) = n(rng);
      }
      dyn.B(i, 0) = n(rng);
    }
    dyn.A -= (spectral_abscissa(dyn.A) + 0.3) * Matrix::Identity(p, p);
    const Matrix S = stationary_covariance(dyn, Gain{Matrix::Zero(1, p)});
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(WithTheta, SplitsColumns) {
  const auto [dyn, cost] = airplane_model();
  Matrix theta = dyn.theta();
  theta(0, 5) = 3.0;
  const Dynamics other = with_theta(dyn, theta);
  EXPECT_EQ(other.A, dyn.A);
  EXPECT_EQ(other.B(0, 1), 3.0);
  EXPECT_EQ(other.sigma, dyn.sigma);
  EXPECT_THROW(with_theta(dyn, Matrix::Zero(4, 5)), DimensionError);
}
