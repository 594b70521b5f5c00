#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "taskselect/cmaes.hpp"
#include "taskselect/core.hpp"

namespace taskselect {

/// Logged data plus a static candidate policy to evaluate against it. Several
/// logs (possibly from different logging policies) are pooled step by step.
struct EstimatorInput {
  std::span<const RolloutLog> logs;
  PolicyDistribution candidate;
};

/// Checks support and task-count consistency; returns the pooled step count.
/// Throws empty_logs, zero_propensity, or inconsistent_logs.
std::size_t check_estimator_input(const EstimatorInput& input);

/// Mean over all pooled steps of (candidate[task] / propensity) * reward.
double v_hat_is(const EstimatorInput& input);

/// Self-normalized estimate sum(w r) / sum(w). Throws zero_normalizer when
/// every importance weight is zero.
double v_hat_wis(const EstimatorInput& input);

/// (sum w)^2 / sum w^2 over pooled steps.
double effective_sample_size(const EstimatorInput& input);

/// WIS value of softmax(omega) plus lambda times its entropy (nats).
double regularized_objective(const EstimatorInput& input, std::span<const double> omega,
                             double lambda);

/// Per-task sufficient statistics of a pooled log set. For a static candidate
/// c the estimators reduce to dot products with these vectors, which is what
/// the optimizer evaluates in its inner loop.
struct LoggedTaskTotals {
  std::size_t n_tasks = 0;
  std::size_t steps = 0;
  std::vector<double> reward_over_propensity;    // sum r / p
  std::vector<double> inverse_propensity;        // sum 1 / p
  std::vector<double> inverse_propensity_sq;     // sum 1 / p^2

  static LoggedTaskTotals from_logs(std::span<const RolloutLog> logs);

  double v_hat_is(const PolicyDistribution& candidate) const;
  double v_hat_wis(const PolicyDistribution& candidate) const;
  double effective_sample_size(const PolicyDistribution& candidate) const;
  double regularized_objective(std::span<const double> omega, double lambda) const;
};

struct ImprovementConfig {
  double lambda = 0.2;
  CmaesConfig cmaes;  // dimension is taken from the logs
  std::size_t iterations = 1;
  std::uint64_t seed = 0;
};

struct IterationDiagnostics {
  std::size_t iteration = 0;   // 1-based
  std::size_t logs_used = 0;
  std::size_t steps_used = 0;
  std::vector<double> omega;
  std::vector<double> probs;
  double objective = 0.0;
  double v_hat_wis = 0.0;
  double v_hat_is = 0.0;
  double entropy = 0.0;
  double effective_sample_size = 0.0;
  std::vector<double> generation_best;  // CMA-ES best objective per generation
};

struct ImprovementResult {
  std::vector<double> omega;
  double best_objective = 0.0;
  std::vector<IterationDiagnostics> iterations;
  std::string strategy;  // CMA-ES strategy parameters
};

/// Collects fresh rollouts under a candidate policy between improvement rounds.
/// Receives the 1-based round that just finished.
using RolloutCollector =
    std::function<std::vector<RolloutLog>(const std::vector<double>& omega, std::size_t round)>;

/// Maximizes regularized_objective by CMA-ES from omega = 0. Each round
/// optimizes against every log gathered so far; when config.iterations > 1 the
/// collector supplies new logs after every round except the last.
ImprovementResult improve_policy(std::vector<RolloutLog> logs, const ImprovementConfig& config,
                                 const RolloutCollector& collect = {});

/// Plain-text report of an improvement run.
std::string format_diagnostics(const ImprovementResult& result, const ImprovementConfig& config);

}  // namespace taskselect
