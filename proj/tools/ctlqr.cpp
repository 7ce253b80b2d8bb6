// ctlqr: run, validate, care, accept.

#include <CLI11.hpp>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "ctlqr/acceptance.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/experiment.hpp"
#include "ctlqr/system_io.hpp"

namespace {

using namespace ctlqr;

struct SystemChoice {
  bool airplane = false;
  std::string file;

  std::pair<Dynamics, CostSpec> load() const {
    if (!file.empty()) return load_system(file);
    return airplane_model();
  }
  std::string label() const { return file.empty() ? "airplane" : file; }
};

void add_system_flags(CLI::App* cmd, SystemChoice& choice) {
  auto* air = cmd->add_flag("--airplane", choice.airplane,
                            "Use the built-in airplane benchmark");
  auto* sys = cmd->add_option("--system", choice.file, "System file");
  air->excludes(sys);
}

void print_matrix(std::ostream& out, const char* name, const Matrix& M) {
  out << name << " =\n";
  Eigen::IOFormat format(10, 0, "  ", "\n", "  ", "");
  out << M.format(format) << '\n';
}

int cmd_validate(const SystemChoice& choice) {
  const auto [dyn, cost] = choice.load();
  const ValidationReport r = validate(dyn, cost);
  std::cout << "system: " << choice.label() << " (p=" << dyn.p()
            << ", q=" << dyn.q() << ")\n"
            << "sigma rank: " << r.sigma_rank << "/" << dyn.p()
            << ", smallest singular value " << r.sigma_min_singular_value
            << (r.sigma_full_rank ? " [ok]" : " [FAIL]") << '\n'
            << "stabilizable: " << (r.stabilizable ? "yes [ok]" : "no [FAIL]")
            << '\n'
            << "Q positive definite: " << (r.q_positive_definite ? "yes" : "no")
            << '\n'
            << "R positive definite: " << (r.r_positive_definite ? "yes" : "no")
            << '\n';
  for (const auto& f : r.failures) std::cout << "failure: " << f << '\n';
  std::cout << (r.pass() ? "PASS" : "FAIL") << '\n';
  return r.pass() ? 0 : 1;
}

int cmd_care(const SystemChoice& choice) {
  const auto [dyn, cost] = choice.load();
  const RiccatiSolution sol = solve_care(dyn.A, dyn.B, cost.Q, cost.R);
  const Gain K{-cost.R.llt().solve(dyn.B.transpose() * sol.P)};
  std::cout << std::setprecision(10);
  print_matrix(std::cout, "P", sol.P);
  print_matrix(std::cout, "K", K.K);
  const bool hurwitz = is_hurwitz(dyn.A + dyn.B * K.K);
  std::cout << "residual: " << std::scientific << sol.residual
            << std::defaultfloat << '\n'
            << "closed-loop spectral abscissa: "
            << sol.closed_loop_spectral_abscissa << '\n'
            << "closed loop Hurwitz: " << (hurwitz ? "yes" : "no") << '\n';
  return hurwitz ? 0 : 1;
}

struct RunFlags {
  std::string config;
  SystemChoice system;
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<double> horizon;
  std::optional<int> replicates;
  std::string out = "out";
  bool independent = false;
  bool no_oracle_safeguard = false;
  bool serial = false;
};

int cmd_run(const RunFlags& f) {
  ExperimentConfig cfg;
  if (!f.config.empty()) cfg = load_config(f.config);
  if (!f.system.file.empty()) cfg.system = f.system.file;
  if (f.system.airplane) cfg.system = "airplane";
  if (f.seed) cfg.base_seed = *f.seed;
  if (f.dt) cfg.dt = *f.dt;
  if (f.horizon) cfg.horizon = *f.horizon;
  if (f.replicates) cfg.replicates = *f.replicates;
  if (f.independent) cfg.coupled = false;
  if (f.no_oracle_safeguard) cfg.oracle_safeguard = false;
  cfg.check();

  const Dataset data = run_replicates(
      cfg, f.serial ? Execution::kSerial : Execution::kParallel);
  emit_csv(data, f.out);
  int aborted = 0;
  double seconds = 0.0;
  for (std::size_t i = 0; i < data.runs.size(); ++i) {
    const RunRecord& r = data.runs[i];
    seconds += r.wall_seconds;
    if (!r.ok()) {
      ++aborted;
      std::cerr << "replicate " << i << " aborted: " << r.abort_reason << '\n';
    }
  }
  std::cout << "replicates: " << data.runs.size() << " (aborted " << aborted
            << "), simulated " << std::setprecision(4) << seconds
            << " s, output in " << f.out << '\n';
  return 0;
}

int cmd_accept(bool serial) {
  acceptance::Options options;
  options.execution = serial ? Execution::kSerial : Execution::kParallel;
  options.log = &std::cerr;
  const auto results = acceptance::run_all(options);
  return acceptance::report(results, std::cout) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized certainty-equivalent control of continuous-time "
               "stochastic LQ systems"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "Run replicated experiments");
  run->add_option("--config", run_flags.config, "key = value config file");
  add_system_flags(run, run_flags.system);
  run->add_option("--seed", run_flags.seed, "Base seed");
  run->add_option("--dt", run_flags.dt, "Time step");
  run->add_option("--horizon", run_flags.horizon, "Horizon T");
  run->add_option("--replicates", run_flags.replicates, "Replicate count");
  run->add_option("--out", run_flags.out, "Output directory");
  run->add_flag("--independent", run_flags.independent,
                "Independent noise for the oracle system");
  run->add_flag("--no-oracle-safeguard", run_flags.no_oracle_safeguard,
                "Check gains only against the estimate");
  run->add_flag("--serial", run_flags.serial, "Serial reference execution");

  SystemChoice validate_choice;
  auto* val = app.add_subcommand("validate", "Check noise rank, weights and "
                                             "stabilizability");
  add_system_flags(val, validate_choice);

  SystemChoice care_choice;
  auto* care = app.add_subcommand("care", "Solve the Riccati equation");
  add_system_flags(care, care_choice);

  bool accept_serial = false;
  auto* accept = app.add_subcommand("accept", "Run the acceptance suite");
  accept->add_flag("--serial", accept_serial, "Serial reference execution");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*val) return cmd_validate(validate_choice);
    if (*care) return cmd_care(care_choice);
    if (*accept) return cmd_accept(accept_serial);
  } catch (const ctlqr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
