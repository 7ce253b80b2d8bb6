// Serial reference vs OpenMP path for the two replicate-parallel kernels.
// Thread count follows OMP_NUM_THREADS / CTLQR_THREADS.

#include <benchmark/benchmark.h>

#include "ctlqr/experiment.hpp"
#include "ctlqr/linalg.hpp"
#include "ctlqr/model.hpp"
#include "ctlqr/sde.hpp"

namespace {

using namespace ctlqr;

void BM_RunReplicates(benchmark::State& state, Execution execution) {
  ExperimentConfig cfg;
  cfg.horizon = static_cast<double>(state.range(0));
  cfg.replicates = 8;
  for (auto _ : state) {
    Dataset data = run_replicates(cfg, execution);
    benchmark::DoNotOptimize(data.runs.back().regret.regret.data());
  }
  state.counters["workers"] =
      execution == Execution::kParallel ? worker_count() : 1;
  state.SetItemsProcessed(state.iterations() * cfg.replicates);
}

void BM_EnsembleMoments(benchmark::State& state, Execution execution) {
  const auto [dyn, cost] = airplane_model();
  const Gain K = optimal_gain(dyn.A, dyn.B, cost.Q, cost.R);
  const Vector x0 = Vector::Constant(4, 0.5);
  const auto paths = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    EnsembleMoments m =
        ensemble_moments(dyn, K, x0, 1.0, 1e-3, paths, 1000, execution);
    benchmark::DoNotOptimize(m.sample.cov.data());
  }
  state.counters["workers"] =
      execution == Execution::kParallel ? worker_count() : 1;
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_RunReplicates, serial, Execution::kSerial)
    ->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RunReplicates, parallel, Execution::kParallel)
    ->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EnsembleMoments, serial, Execution::kSerial)
    ->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_EnsembleMoments, parallel, Execution::kParallel)
    ->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
