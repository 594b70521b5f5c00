// Serial reference vs OpenMP kernels for the two data-parallel workloads:
// per-seed experiment runs and per-candidate CMA-ES objective evaluation.

#include <benchmark/benchmark.h>

#include "taskselect/harness.hpp"

using namespace taskselect;

namespace {

ExperimentSpec exp3s_spec(Execution exec) {
  ExperimentSpec spec;
  spec.env = bandit_init(BanditConfig{});
  spec.policy.kind = PolicyDescriptor::Kind::exp3s;
  spec.execution = exec;
  return spec;
}

const std::vector<RolloutLog>& uniform_logs() {
  static const std::vector<RolloutLog> logs = [] {
    ExperimentSpec spec = exp3s_spec(Execution::parallel);
    spec.policy.kind = PolicyDescriptor::Kind::random;
    std::vector<RolloutLog> out;
    for (auto& run : run_experiment(spec).runs) out.push_back(std::move(run.log));
    return out;
  }();
  return logs;
}

void BM_RunExperiment(benchmark::State& state, Execution exec) {
  const ExperimentSpec spec = exp3s_spec(exec);
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(spec));
}

// Direct per-step WIS inside CMA-ES: the expensive evaluation path.
void BM_CmaesDirectWis(benchmark::State& state, Execution exec) {
  const auto& logs = uniform_logs();
  CmaesConfig c;
  c.dimension = 8;
  c.iterations = 5;
  c.mode = OptimizeMode::maximize;
  c.execution = exec;
  const Objective f = [&](const std::vector<double>& omega) {
    return regularized_objective({logs, PolicyDistribution::uniform(8)}, omega, 0.2);
  };
  for (auto _ : state) benchmark::DoNotOptimize(cmaes_optimize(f, c));
}

// Sufficient-statistics objective used by improve_policy.
void BM_TotalsWis(benchmark::State& state) {
  const LoggedTaskTotals totals = LoggedTaskTotals::from_logs(uniform_logs());
  const std::vector<double> omega{0.1, -0.2, 0.3, 0.0, 0.5, -0.4, 0.2, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(totals.regularized_objective(omega, 0.2));
}

void BM_DirectWis(benchmark::State& state) {
  const auto& logs = uniform_logs();
  const std::vector<double> omega{0.1, -0.2, 0.3, 0.0, 0.5, -0.4, 0.2, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(regularized_objective({logs, PolicyDistribution::uniform(8)}, omega, 0.2));
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_RunExperiment, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_RunExperiment, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CmaesDirectWis, serial, Execution::serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_CmaesDirectWis, parallel, Execution::parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TotalsWis);
BENCHMARK(BM_DirectWis)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
