#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ctlqr/errors.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/noise.hpp"
#include "ctlqr/policy.hpp"
#include "ctlqr/regret.hpp"
#include "ctlqr/sde.hpp"

using namespace ctlqr;

namespace {

Trajectory constant_cost_path(double horizon, double dt, double rate) {
  Trajectory tr;
  const auto n = static_cast<std::size_t>(std::llround(horizon / dt));
  for (std::size_t k = 0; k <= n; ++k) {
    tr.times.push_back(static_cast<double>(k) * dt);
    tr.states.push_back(Vector::Zero(1));
    tr.inputs.push_back(Vector::Zero(1));
    tr.running_cost.push_back(rate * static_cast<double>(k) * dt);
  }
  return tr;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST(InstantaneousCost, Examples) {
  const CostSpec cost{Matrix::Identity(2, 2), Matrix::Identity(1, 1)};
  EXPECT_EQ(instantaneous_cost(Vector::Zero(2), Vector::Zero(1), cost), 0.0);
  EXPECT_EQ(instantaneous_cost(Vector::Ones(2), Vector::Constant(1, 2.0), cost),
            6.0);
  const CostSpec scalar{2 * Matrix::Identity(1, 1), Matrix::Identity(1, 1)};
  EXPECT_EQ(instantaneous_cost(Vector::Constant(1, 3.0), Vector::Zero(1), scalar),
            18.0);
  EXPECT_THROW(instantaneous_cost(Vector::Zero(3), Vector::Zero(1), cost),
               DimensionError);
}

TEST(InstantaneousCost, Airplane) {
  const auto [dyn, cost] = airplane_model();
  Vector x = Vector::Ones(4), u = Vector::Ones(2);
  EXPECT_NEAR(instantaneous_cost(x, u, cost), 4.2, 1e-15);
}

TEST(ComputeRegret, IdenticalPathsHaveZeroRegret) {
  const Trajectory tr = constant_cost_path(10.0, 0.5, 3.0);
  const std::vector<double> cps{1.0, 5.0, 10.0};
  const RegretCurve c = compute_regret(tr, tr, cps);
  ASSERT_EQ(c.size(), 3u);
  for (double r : c.regret) EXPECT_EQ(r, 0.0);
}

TEST(ComputeRegret, ConstantCostAgainstZeroOracle) {
  const Trajectory adaptive = constant_cost_path(100.0, 0.1, 1.0);
  const Trajectory oracle = constant_cost_path(100.0, 0.1, 0.0);
  const std::vector<double> cps{4.0, 25.0, 100.0};
  const RegretCurve c = compute_regret(adaptive, oracle, cps);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(c.regret[i], cps[i], 1e-9);
    EXPECT_NEAR(c.normalized[i], std::sqrt(cps[i]), 1e-9);
    EXPECT_DOUBLE_EQ(c.normalized[i], c.regret[i] / std::sqrt(c.times[i]));
  }
}

TEST(ComputeRegret, GridMismatch) {
  const Trajectory a = constant_cost_path(10.0, 0.1, 1.0);
  const Trajectory b = constant_cost_path(10.0, 0.2, 1.0);
  const std::vector<double> cps{1.0};
  EXPECT_THROW(compute_regret(a, b, cps), GridMismatchError);
  const std::vector<double> beyond{20.0};
  EXPECT_THROW(compute_regret(b, b, beyond), GridMismatchError);
  const std::vector<double> nonpositive{0.0};
  EXPECT_THROW(compute_regret(b, b, nonpositive), GridMismatchError);
}

TEST(OracleRun, ZeroNoiseFromOriginIsFree) {
  auto [dyn, cost] = airplane_model();
  dyn.sigma.setZero();
  const NoisePath noise(1, 0.01, 4);
  const std::vector<double> rec{10.0, 50.0};
  const Trajectory tr = oracle_run(dyn, cost, Vector::Zero(4), 100.0, noise, rec);
  ASSERT_EQ(tr.times.back(), 100.0);
  for (double c : tr.running_cost) EXPECT_EQ(c, 0.0);
}

TEST(OracleRun, LongRunAverageCostMatchesRiccati) {
  const auto [dyn, cost] = airplane_model();
  const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
  const double expected =
      (sol.P * dyn.sigma * dyn.sigma.transpose()).trace();
  const NoisePath noise(21, 0.01, 4);
  const Trajectory tr = oracle_run(dyn, cost, Vector::Zero(4), 1e4, noise);
  const double average = tr.running_cost.back() / 1e4;
  EXPECT_NEAR(average, expected, 0.1 * expected);
}

TEST(EtCache, InterpolationAndDecay) {
  const auto [dyn, cost] = airplane_model();
  const EtCache cache(dyn, cost);
  EXPECT_LT(cache.spectral_abscissa(), 0.0);
  EXPECT_LE(cache.max_interpolation_error(), 1e-6);
  EXPECT_LE(cache.max_decay_ratio(), 1.0 + 1e-9);
  EXPECT_LT(cache.exact(cache.horizon()).norm(), 1e-11);
  EXPECT_EQ(cache.at(2 * cache.horizon()), Matrix::Zero(4, 2));
  const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
  EXPECT_LT((cache.at(0.0) - sol.P * dyn.B).norm(), 1e-12);
  for (double t : {0.37, 3.3, 17.0}) {
    EXPECT_LE((cache.at(t) - cache.exact(t)).norm(), 1e-6);
  }
}

TEST(Decomposition, OptimalGainHasNoExcess) {
  const auto [dyn, cost] = airplane_model();
  const EtCache cache(dyn, cost, 512);
  const NoisePath noise(4, 0.01, 4);
  const auto r = simulate_segment(dyn, cost, cache.optimal(), {Vector::Zero(4)},
                                  100.0, noise, nullptr);
  const std::vector<Gain> gains(r.trajectory.size(), cache.optimal());
  const RegretDecomposition d =
      decomposition_check(r.trajectory, gains, cache, 100.0);
  EXPECT_EQ(d.quadratic_term, 0.0);
  EXPECT_EQ(d.cross_term, 0.0);
  EXPECT_EQ(d.L_T(), 0.0);
}

TEST(Decomposition, QuadraticTermMatchesGramRoute) {
  const auto [dyn, cost] = airplane_model();
  const EtCache cache(dyn, cost, 512);
  const Gain K{cache.optimal().K * 0.8};
  ASSERT_TRUE(is_hurwitz(dyn.A + dyn.B * K.K));
  const NoisePath noise(6, 0.01, 4);
  EstimatorAccumulators acc = EstimatorAccumulators::zeros(4, 2);
  const auto r = simulate_segment(dyn, cost, K, {Vector::Zero(4)}, 200.0,
                                  noise, &acc);
  const std::vector<Gain> gains(r.trajectory.size(), K);
  const RegretDecomposition d =
      decomposition_check(r.trajectory, gains, cache, 200.0);
  const Matrix delta = K.K - cache.optimal().K;
  const double gram_route =
      ((delta.transpose() * delta) * acc.state_gram()).trace();
  EXPECT_GT(d.quadratic_term, 0.0);
  EXPECT_NEAR(d.quadratic_term, gram_route, 1e-9 * gram_route);
  EXPECT_THROW(decomposition_check(r.trajectory,
                                   std::span<const Gain>(gains).first(3),
                                   cache, 200.0),
               DimensionError);
}

TEST(Regret, MeanIsNonnegativeUnderIndependentNoise) {
  const auto [dyn, cost] = airplane_model();
  PolicyOptions opts;
  opts.coupled = false;
  std::vector<double> finals;
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const RunRecord rec =
        run_algorithm1(dyn, cost, schedule(25.0, 1.2, 2000.0), 1e-2, seed, opts);
    ASSERT_TRUE(rec.ok()) << rec.abort_reason;
    finals.push_back(rec.regret.regret.back());
  }
  double mean = 0.0;
  for (double r : finals) mean += r;
  mean /= finals.size();
  double var = 0.0;
  for (double r : finals) var += (r - mean) * (r - mean);
  const double se = std::sqrt(var / (finals.size() - 1) / finals.size());
  EXPECT_GT(mean, 0.0) << "mean " << mean << " se " << se;
  RecordProperty("mean_final_regret", std::to_string(mean));
}

TEST(Regret, QuadraticTermGrowsLikeSqrtT) {
  const auto [dyn, cost] = airplane_model();
  const auto sched = schedule(25.0, 1.2, 2e4);
  std::vector<std::vector<double>> curves;
  std::vector<double> times;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunRecord rec = run_algorithm1(dyn, cost, sched, 1e-2, seed);
    ASSERT_TRUE(rec.ok()) << rec.abort_reason;
    times = rec.regret.times;
    curves.push_back(rec.quadratic_term);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 1e3) continue;
    std::vector<double> column;
    for (const auto& c : curves) column.push_back(c[i]);
    const double x = std::log(times[i]), y = std::log(median(column));
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++n;
  }
  ASSERT_GE(n, 5);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  EXPECT_GE(slope, 0.35);
  EXPECT_LE(slope, 0.75);
  RecordProperty("quadratic_slope", std::to_string(slope));
}
