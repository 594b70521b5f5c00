#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taskselect/bandit.hpp"
#include "taskselect/counterfactual.hpp"
#include "taskselect/parallel.hpp"
#include "taskselect/policies.hpp"

namespace taskselect {

struct ExperimentSpec {
  BanditState env;  // realized environment, scores at zero
  PolicyDescriptor policy;
  std::string name;  // output label; defaults to the policy type
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t record_every = 10;
  /// Write the full acting distribution on every log line. Static policies
  /// carry their distribution in the header descriptor instead.
  bool log_distribution_for_static = false;
  Execution execution = Execution::parallel;
};

void validate(const ExperimentSpec& spec);

struct SeedRun {
  std::uint64_t seed = 0;
  RolloutLog log;
  std::vector<double> series;  // average score at each recorded step
  double final_score = 0.0;
  std::vector<std::uint64_t> pulls;
};

struct SeriesPoint {
  std::uint64_t step = 0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct AggregateSeries {
  std::vector<SeriesPoint> points;
};

struct ExperimentResult {
  std::string name;
  std::vector<SeedRun> runs;
  AggregateSeries aggregate;
};

/// Steps at which average_score is recorded: multiples of `every`, plus T.
std::vector<std::uint64_t> recorded_steps(std::uint64_t horizon, std::uint64_t every);

/// Median with the mean of the middle pair for even counts.
double median(std::vector<double> values);

/// Oracle descriptors resolve to the environment's hidden distribution.
std::unique_ptr<Policy> resolve_policy(const PolicyDescriptor& desc, const BanditState& env);

/// One seed: the seed drives task sampling and the reward-scaler reservoir.
SeedRun run_seed(const ExperimentSpec& spec, std::uint64_t seed);

AggregateSeries aggregate_runs(const std::vector<SeedRun>& runs, std::uint64_t horizon,
                               std::uint64_t record_every);

ExperimentResult run_experiment(const ExperimentSpec& spec);

std::string log_file_name(const std::string& name, std::uint64_t seed);
std::string series_file_name(const std::string& name);

/// Writes env.json, one log per seed and the series file into `dir`. Files
/// written by this call are removed again if any write fails.
std::vector<std::filesystem::path> write_experiment(const ExperimentResult& result,
                                                    const BanditState& env,
                                                    const std::filesystem::path& dir);

std::string format_series_csv(const AggregateSeries& series);
AggregateSeries parse_series_csv(const std::string& text);
void write_series(const AggregateSeries& series, const std::filesystem::path& path);
AggregateSeries read_series(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Comparison of aggregated series
// ---------------------------------------------------------------------------

struct NamedSeries {
  std::string name;
  AggregateSeries series;
  std::string source;  // file path, for error messages
};

struct CompareRow {
  std::string name;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

/// Final-step rows sorted by descending median. Throws invalid_argument when
/// the series disagree on their recorded steps.
std::vector<CompareRow> compare_series(const std::vector<NamedSeries>& series);
std::string format_compare_table(const std::vector<CompareRow>& rows);
/// Header: step,<name>_median,<name>_min,<name>_max,...
std::string format_merged_csv(const std::vector<NamedSeries>& series);

/// Policy label from a series path: "runs/exp3s_series.csv" -> "exp3s".
std::string series_name_from_path(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Counterfactual improvement against the bandit
// ---------------------------------------------------------------------------

/// Collector that reruns softmax(omega) on `env` for every seed in `seeds`,
/// offset by 1000 * round so fresh rollouts never reuse evaluation seeds.
RolloutCollector bandit_collector(const BanditState& env, std::vector<std::uint64_t> seeds,
                                  Execution execution);

PolicyDescriptor softmax_descriptor(const std::vector<double>& omega);

struct GridRow {
  double lambda = 0.0;
  ImprovementResult improvement;
  double entropy = 0.0;
  bool evaluated = false;
  double median_final = 0.0;
};

std::string format_grid_summary(const std::vector<GridRow>& rows);

/// End-to-end reproduction of the synthetic multitask-bandit comparison:
/// oracle, uniform random, Exp3.S and the counterfactual policy learned from
/// uniform-policy logs.
struct BenchmarkConfig {
  BanditConfig env;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t record_every = 10;
  double eta = 1e-3;
  double epsilon = 0.05;
  double lambda = 0.2;
  std::size_t improvement_rounds = 2;
  std::size_t cma_population = 64;
  std::size_t cma_iterations = 20;
  double cma_sigma0 = 0.5;
  std::uint64_t optimizer_seed = 0;
  Execution execution = Execution::parallel;
};

struct BenchmarkResult {
  BanditState env;
  std::vector<ExperimentResult> experiments;  // oracle, random, exp3s, counterfactual
  ImprovementResult improvement;
  std::vector<CompareRow> table;

  const ExperimentResult& experiment(const std::string& name) const;
  double median_final(const std::string& name) const;
};

BenchmarkResult run_benchmark(const BenchmarkConfig& config);

}  // namespace taskselect
