#include "ctlqr/acceptance.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ctlqr/errors.hpp"
#include "ctlqr/experiment.hpp"
#include "ctlqr/regret.hpp"

namespace ctlqr::acceptance {

namespace {

// Fixed acceptance parameters.
constexpr double kHorizon = 2e4;
constexpr double kDt = 1e-2;
constexpr double kFineDt = 5e-3;
constexpr int kReplicates = 20;
constexpr std::uint64_t kBaseSeed = 1;

constexpr double kRegretSlopeLow = 0.35;
constexpr double kRegretSlopeHigh = 0.75;
constexpr double kNormalizedGrowthMax = 3.0;
constexpr double kErrorSlopeLow = -0.45;
constexpr double kErrorSlopeHigh = -0.10;
constexpr double kErrorMinGamma = 500.0;
constexpr double kCareResidualMax = 1e-8;
constexpr double kScalarTol = 1e-12;
constexpr double kStdErrors = 5.0;
constexpr double kCovRelErrorMax = 0.15;
constexpr double kCouplingRelTol = 1e-9;
constexpr double kNoiseStatMax = 100.0;
constexpr double kResampleRateMax = 0.05;
constexpr double kDtChangeMax = 0.10;

std::string fmt(double x, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

void log_line(const Options& o, const std::string& msg) {
  if (o.log) *o.log << "[accept] " << msg << std::endl;
}

ExperimentConfig a1_config() {
  ExperimentConfig cfg;
  cfg.system = "airplane";
  cfg.horizon = kHorizon;
  cfg.dt = kDt;
  cfg.noise_dt = kFineDt;
  cfg.replicates = kReplicates;
  cfg.base_seed = kBaseSeed;
  cfg.coupled = true;
  cfg.oracle_safeguard = true;
  const EpisodeSchedule sched = schedule(cfg.gamma0, cfg.growth, cfg.horizon);
  cfg.checkpoints = sched.times;
  for (double t : {1000.0, 2500.0, 5000.0, 10000.0, kHorizon}) {
    cfg.checkpoints.push_back(t);
  }
  std::sort(cfg.checkpoints.begin(), cfg.checkpoints.end());
  cfg.checkpoints.erase(
      std::unique(cfg.checkpoints.begin(), cfg.checkpoints.end()),
      cfg.checkpoints.end());
  return cfg;
}

std::vector<const RunRecord*> ok_runs(const Dataset& data) {
  std::vector<const RunRecord*> out;
  for (const auto& r : data.runs) {
    if (r.ok()) out.push_back(&r);
  }
  return out;
}

// Median over replicates of f(run, i) at checkpoint i.
template <class F>
std::vector<double> median_curve(const std::vector<const RunRecord*>& runs,
                                 std::size_t n, F f) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> v;
    for (const RunRecord* r : runs) v.push_back(f(*r, i));
    out[i] = median(v);
  }
  return out;
}

std::size_t index_of(const std::vector<double>& times, double t) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) < 1e-6) return i;
  }
  throw Error("checkpoint " + fmt(t) + " missing");
}

CriterionResult a1(const std::vector<const RunRecord*>& runs,
                   std::size_t total) {
  CriterionResult res{"A1", "bounded normalized regret", false, ""};
  if (runs.empty()) {
    res.detail = "no successful replicates";
    return res;
  }
  const RegretCurve& ref = runs.front()->regret;
  const std::size_t n = ref.size();
  const auto med_norm = median_curve(
      runs, n, [](const RunRecord& r, std::size_t i) {
        return r.regret.normalized[i];
      });
  const auto med_regret = median_curve(
      runs, n, [](const RunRecord& r, std::size_t i) { return r.regret.regret[i]; });
  const double m_end = med_norm[index_of(ref.times, kHorizon)];
  const double m_mid = med_norm[index_of(ref.times, 2500.0)];
  std::vector<double> lx, ly;
  bool positive = true;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = ref.times[i];
    if (t < 1000.0 - 1e-9 || t > kHorizon + 1e-9) continue;
    if (!(med_regret[i] > 0.0)) positive = false;
    lx.push_back(std::log(t));
    ly.push_back(std::log(std::max(med_regret[i], 1e-300)));
  }
  const double slope = ols_slope(lx, ly);
  res.passed = positive && m_end <= kNormalizedGrowthMax * m_mid &&
               slope >= kRegretSlopeLow && slope <= kRegretSlopeHigh;
  res.detail = "m(2e4)=" + fmt(m_end) + " m(2.5e3)=" + fmt(m_mid) +
               " ratio=" + fmt(m_end / m_mid) + " (<=3), slope=" + fmt(slope) +
               " in [0.35,0.75], replicates ok " + std::to_string(runs.size()) +
               "/" + std::to_string(total);
  return res;
}

CriterionResult a2(const std::vector<const RunRecord*>& runs) {
  CriterionResult res{"A2", "estimation-error rate", false, ""};
  if (runs.empty()) {
    res.detail = "no successful replicates";
    return res;
  }
  std::size_t episodes = runs.front()->episodes.size();
  for (const RunRecord* r : runs) episodes = std::min(episodes, r->episodes.size());
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < episodes; ++k) {
    const double gamma = runs.front()->episodes[k].gamma_n;
    if (gamma < kErrorMinGamma) continue;
    std::vector<double> errs;
    for (const RunRecord* r : runs) errs.push_back(r->episodes[k].estimation_error);
    lx.push_back(std::log(gamma));
    ly.push_back(std::log(median(errs)));
  }
  const double slope = ols_slope(lx, ly);
  res.passed = slope >= kErrorSlopeLow && slope <= kErrorSlopeHigh;
  res.detail = "slope=" + fmt(slope) + " in [-0.45,-0.10] over " +
               std::to_string(lx.size()) + " episodes with gamma_n>=500";
  return res;
}

CriterionResult a3() {
  CriterionResult res{"A3", "Riccati certification", false, ""};
  const auto [dyn, cost] = airplane_model();
  const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
  Matrix one = Matrix::Constant(1, 1, 1.0);
  const RiccatiSolution scalar = solve_care(-one, one, one, one);
  const double truth = std::sqrt(2.0) - 1.0;
  const double scalar_err = std::abs(scalar.P(0, 0) - truth);
  const double residual = care_residual(dyn.A, dyn.B, cost.Q, cost.R, sol.P);
  res.passed = residual <= kCareResidualMax &&
               sol.closed_loop_spectral_abscissa < 0.0 &&
               scalar_err <= kScalarTol;
  res.detail = "airplane residual=" + fmt(residual, 3) +
               " abscissa=" + fmt(sol.closed_loop_spectral_abscissa) +
               " scalar |P-(sqrt2-1)|=" + fmt(scalar_err, 3);
  return res;
}

CriterionResult a4(Execution execution) {
  CriterionResult res{"A4", "simulator fidelity", false, ""};
  const auto [dyn, cost] = airplane_model();
  const Gain K = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  Vector x0(4);
  x0 << 0.5, -0.5, 0.5, -0.5;
  const double t = 5.0;
  const EnsembleMoments mc =
      ensemble_moments(dyn, K, x0, t, 1e-3, 2000, 1000, execution);
  const Moments exact = closed_form_moments(dyn, K, x0, t);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    worst = std::max(worst, std::abs(mc.sample.mean(i) - exact.mean(i)) /
                                mc.mean_stderr(i));
    for (Eigen::Index j = 0; j < 4; ++j) {
      worst = std::max(worst, std::abs(mc.sample.cov(i, j) - exact.cov(i, j)) /
                                  mc.cov_stderr(i, j));
    }
  }
  res.passed = worst <= kStdErrors;
  res.detail = "max |MC - exact| / stderr = " + fmt(worst) +
               " (<=5) over mean and covariance, 2000 paths, dt=1e-3, t=5";
  return res;
}

CriterionResult a5() {
  CriterionResult res{"A5", "empirical covariance limit", false, ""};
  const auto [dyn, cost] = airplane_model();
  const Gain K = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  const double T = 5e3;
  const NoisePath noise(77, kDt, 4);
  EstimatorAccumulators acc = EstimatorAccumulators::zeros(4, 2);
  SimulationOptions sim;
  sim.record_stride = 0;
  simulate_segment(dyn, cost, K, SegmentState{Vector::Zero(4)}, T, noise,
                   &acc, sim);
  const Matrix empirical = acc.state_gram() / acc.elapsed;
  const Matrix Sinf = stationary_covariance(dyn, K);
  const double rel = (empirical - Sinf).norm() / Sinf.norm();
  res.passed = rel <= kCovRelErrorMax;
  res.detail = "relative Frobenius error=" + fmt(rel) + " (<=0.15), T=5e3";
  return res;
}

CriterionResult a6() {
  CriterionResult res{"A6", "oracle coupling zero", false, ""};
  const auto [dyn, cost] = airplane_model();
  ExperimentConfig cfg = a1_config();
  PolicyOptions options = cfg.policy_options();
  options.truth_estimates = true;
  options.zero_perturbation = true;
  options.initial_theta = dyn.theta();
  const EpisodeSchedule sched = schedule(cfg.gamma0, cfg.growth, cfg.horizon);
  const RunRecord run =
      run_algorithm1(dyn, cost, sched, cfg.dt, kBaseSeed, options);
  double worst = 0.0;
  for (std::size_t i = 0; i < run.regret.size(); ++i) {
    worst = std::max(worst,
                     std::abs(run.regret.regret[i]) / run.regret.times[i]);
  }
  res.passed = run.ok() && !run.regret.times.empty() &&
               worst <= kCouplingRelTol;
  res.detail = "max |R(T)|/T=" + fmt(worst, 3) + " (<=1e-9) over " +
               std::to_string(run.regret.size()) + " checkpoints";
  return res;
}

CriterionResult a7(const std::vector<const RunRecord*>& runs) {
  CriterionResult res{"A7", "self-normalized statistic bounded", false, ""};
  double worst = 0.0;
  std::size_t count = 0;
  for (const RunRecord* r : runs) {
    for (const auto& ep : r->episodes) {
      worst = std::max(worst, ep.noise_statistic);
      ++count;
    }
  }
  const auto [dyn, cost] = airplane_model();
  const Gain K = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  const NoisePath noise(99, kDt, 4);
  EstimatorAccumulators acc = EstimatorAccumulators::zeros(4, 2);
  SimulationOptions sim;
  sim.record_stride = 0;
  simulate_segment(dyn, cost, K, SegmentState{Vector::Zero(4)}, 2000.0, noise,
                   &acc, sim);
  const double trivial = self_normalized_statistic(acc);
  res.passed = count > 0 && worst < kNoiseStatMax && trivial < kNoiseStatMax;
  res.detail = "max over " + std::to_string(count) +
               " episode checkpoints=" + fmt(worst) +
               ", K* single episode=" + fmt(trivial) + " (<100)";
  return res;
}

CriterionResult a8(const std::vector<const RunRecord*>& runs) {
  CriterionResult res{"A8", "safeguard economy", false, ""};
  std::size_t episodes = 0, with_resample = 0, events = 0;
  for (const RunRecord* r : runs) {
    for (const auto& ep : r->episodes) {
      if (ep.gamma_n < kErrorMinGamma) continue;
      ++episodes;
      if (ep.resamples > 0) ++with_resample;
      events += static_cast<std::size_t>(ep.resamples);
    }
  }
  const double rate =
      episodes ? static_cast<double>(with_resample) / episodes : 1.0;
  res.passed = episodes > 0 && rate < kResampleRateMax;
  res.detail = "episodes with resamples " + std::to_string(with_resample) +
               "/" + std::to_string(episodes) + " = " + fmt(rate) +
               " (<0.05), resample events " + std::to_string(events);
  return res;
}

CriterionResult a9(const Dataset& data) {
  CriterionResult res{"A9", "dt-robustness", false, ""};
  const RunRecord& base = data.runs.front();
  if (!base.ok()) {
    res.detail = "replicate 0 aborted: " + base.abort_reason;
    return res;
  }
  ExperimentConfig cfg = data.config;
  cfg.dt = kFineDt;
  cfg.replicates = 1;
  cfg.base_seed = base.seed;
  const Dataset fine = run_replicates(cfg, Execution::kSerial);
  const RunRecord& rerun = fine.runs.front();
  if (!rerun.ok()) {
    res.detail = "dt=5e-3 rerun aborted: " + rerun.abort_reason;
    return res;
  }
  const double a = base.regret.normalized.back();
  const double b = rerun.regret.normalized.back();
  const double change = std::abs(b - a) / std::abs(a);
  res.passed = change < kDtChangeMax;
  res.detail = "replicate 0 final normalized regret dt=1e-2: " + fmt(a) +
               ", dt=5e-3: " + fmt(b) + ", change=" + fmt(change) + " (<0.10)";
  return res;
}

}  // namespace

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionError("need at least two points for a slope");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DimensionError("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CriterionResult> run_all(const Options& options) {
  std::vector<CriterionResult> out;
  auto guarded = [&](const std::string& id, auto fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({id, "error", false, e.what()});
    }
  };

  log_line(options, "A1 dataset: 20 replicates, horizon 2e4, dt 1e-2");
  Dataset data;
  bool have_data = false;
  try {
    data = run_replicates(a1_config(), options.execution);
    have_data = true;
  } catch (const std::exception& e) {
    log_line(options, std::string("A1 dataset failed: ") + e.what());
  }
  const auto runs = have_data ? ok_runs(data) : std::vector<const RunRecord*>{};

  guarded("A1", [&] { return a1(runs, data.runs.size()); });
  guarded("A2", [&] { return a2(runs); });
  log_line(options, "A3 Riccati");
  guarded("A3", [] { return a3(); });
  log_line(options, "A4 moment matching, 2000 paths");
  guarded("A4", [&] { return a4(options.execution); });
  log_line(options, "A5 empirical covariance");
  guarded("A5", [] { return a5(); });
  log_line(options, "A6 coupled forced-oracle run");
  guarded("A6", [] { return a6(); });
  guarded("A7", [&] { return a7(runs); });
  guarded("A8", [&] { return a8(runs); });
  log_line(options, "A9 dt=5e-3 rerun of replicate 0");
  guarded("A9", [&] {
    if (!have_data) throw Error("A1 dataset unavailable");
    return a9(data);
  });
  return out;
}

bool report(const std::vector<CriterionResult>& results, std::ostream& out) {
  bool all = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.id << ' ' << r.title << ": "
        << r.detail << '\n';
    all = all && r.passed;
  }
  out << (all ? "ALL PASS" : "SOME CRITERIA FAILED") << '\n';
  return all;
}

}  // namespace ctlqr::acceptance
