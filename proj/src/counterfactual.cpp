#include "taskselect/counterfactual.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace taskselect {

namespace {

struct WeightSums {
  double w = 0.0;
  double wr = 0.0;
  double w2 = 0.0;
  std::size_t steps = 0;
};

WeightSums weight_sums(const EstimatorInput& input) {
  WeightSums s;
  s.steps = check_estimator_input(input);
  for (const RolloutLog& log : input.logs) {
    for (const StepRecord& step : log.steps) {
      const double w = input.candidate[step.task] / step.propensity;
      s.w += w;
      s.wr += w * step.reward;
      s.w2 += w * w;
    }
  }
  return s;
}

double dot(const PolicyDistribution& c, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) s += c[k] * v[k];
  return s;
}

}  // namespace

std::size_t check_estimator_input(const EstimatorInput& input) {
  if (input.logs.empty()) throw Error(ErrorCode::empty_logs, "no rollout logs supplied");
  std::size_t total = 0;
  for (const RolloutLog& log : input.logs) {
    if (log.n_tasks != input.candidate.size()) {
      throw Error(ErrorCode::inconsistent_logs,
                  "log '" + log.run_id + "' has " + std::to_string(log.n_tasks) +
                      " tasks, candidate has " + std::to_string(input.candidate.size()));
    }
    for (const StepRecord& step : log.steps) {
      if (!(step.propensity > 0.0)) {
        throw Error(ErrorCode::zero_propensity,
                    "log '" + log.run_id + "' step t=" + std::to_string(step.t));
      }
      if (step.task.index >= log.n_tasks) {
        throw Error(ErrorCode::invariant_violation,
                    "log '" + log.run_id + "' step t=" + std::to_string(step.t) +
                        " has task out of range");
      }
    }
    total += log.steps.size();
  }
  if (total == 0) throw Error(ErrorCode::empty_logs, "rollout logs contain no steps");
  return total;
}

double v_hat_is(const EstimatorInput& input) {
  const WeightSums s = weight_sums(input);
  return s.wr / static_cast<double>(s.steps);
}

double v_hat_wis(const EstimatorInput& input) {
  const WeightSums s = weight_sums(input);
  if (s.w == 0.0) {
    throw Error(ErrorCode::zero_normalizer, "candidate gives zero probability to every logged task");
  }
  return s.wr / s.w;
}

double effective_sample_size(const EstimatorInput& input) {
  const WeightSums s = weight_sums(input);
  if (s.w2 == 0.0) return 0.0;
  return s.w * s.w / s.w2;
}

double regularized_objective(const EstimatorInput& input, std::span<const double> omega,
                             double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  const PolicyDistribution c = softmax(omega);
  const EstimatorInput candidate_input{input.logs, c};
  return v_hat_wis(candidate_input) + lambda * entropy(c);
}

// ---------------------------------------------------------------------------

LoggedTaskTotals LoggedTaskTotals::from_logs(std::span<const RolloutLog> logs) {
  if (logs.empty()) throw Error(ErrorCode::empty_logs, "no rollout logs supplied");
  LoggedTaskTotals t;
  t.n_tasks = logs.front().n_tasks;
  const EstimatorInput probe{logs, PolicyDistribution::uniform(t.n_tasks)};
  t.steps = check_estimator_input(probe);
  t.reward_over_propensity.assign(t.n_tasks, 0.0);
  t.inverse_propensity.assign(t.n_tasks, 0.0);
  t.inverse_propensity_sq.assign(t.n_tasks, 0.0);
  for (const RolloutLog& log : logs) {
    for (const StepRecord& step : log.steps) {
      const double inv = 1.0 / step.propensity;
      const std::size_t k = step.task.index;
      t.reward_over_propensity[k] += inv * step.reward;
      t.inverse_propensity[k] += inv;
      t.inverse_propensity_sq[k] += inv * inv;
    }
  }
  return t;
}

double LoggedTaskTotals::v_hat_is(const PolicyDistribution& candidate) const {
  if (candidate.size() != n_tasks) throw Error(ErrorCode::inconsistent_logs, "candidate size mismatch");
  return dot(candidate, reward_over_propensity) / static_cast<double>(steps);
}

double LoggedTaskTotals::v_hat_wis(const PolicyDistribution& candidate) const {
  if (candidate.size() != n_tasks) throw Error(ErrorCode::inconsistent_logs, "candidate size mismatch");
  const double z = dot(candidate, inverse_propensity);
  if (z == 0.0) {
    throw Error(ErrorCode::zero_normalizer, "candidate gives zero probability to every logged task");
  }
  return dot(candidate, reward_over_propensity) / z;
}

double LoggedTaskTotals::effective_sample_size(const PolicyDistribution& candidate) const {
  if (candidate.size() != n_tasks) throw Error(ErrorCode::inconsistent_logs, "candidate size mismatch");
  const double sw = dot(candidate, inverse_propensity);
  double sw2 = 0.0;
  for (std::size_t k = 0; k < n_tasks; ++k) sw2 += candidate[k] * candidate[k] * inverse_propensity_sq[k];
  return sw2 == 0.0 ? 0.0 : sw * sw / sw2;
}

double LoggedTaskTotals::regularized_objective(std::span<const double> omega, double lambda) const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  const PolicyDistribution c = softmax(omega);
  return v_hat_wis(c) + lambda * entropy(c);
}

// ---------------------------------------------------------------------------

ImprovementResult improve_policy(std::vector<RolloutLog> logs, const ImprovementConfig& config,
                                 const RolloutCollector& collect) {
  if (logs.empty()) throw Error(ErrorCode::empty_logs, "no rollout logs supplied");
  if (!(config.lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be >= 0");
  if (config.iterations < 1) throw Error(ErrorCode::invalid_argument, "iterations must be >= 1");
  if (config.iterations > 1 && !collect) {
    throw Error(ErrorCode::invalid_argument,
                "more than one improvement round needs a rollout collector");
  }
  const std::size_t n_tasks = logs.front().n_tasks;
  for (const RolloutLog& log : logs) {
    if (log.n_tasks != n_tasks) {
      throw Error(ErrorCode::inconsistent_logs,
                  "log '" + log.run_id + "' has " + std::to_string(log.n_tasks) +
                      " tasks, expected " + std::to_string(n_tasks));
    }
  }

  ImprovementResult result;
  for (std::size_t round = 1; round <= config.iterations; ++round) {
    const LoggedTaskTotals totals = LoggedTaskTotals::from_logs(logs);

    CmaesConfig cma = config.cmaes;
    cma.dimension = n_tasks;
    cma.mode = OptimizeMode::maximize;
    cma.initial_mean.clear();
    cma.seed = config.seed + (round - 1);

    const double lambda = config.lambda;
    const CmaesResult found = cmaes_optimize(
        [&totals, lambda](const std::vector<double>& omega) {
          return totals.regularized_objective(omega, lambda);
        },
        cma);

    IterationDiagnostics diag;
    diag.iteration = round;
    diag.logs_used = logs.size();
    diag.steps_used = totals.steps;
    diag.omega = found.best_point;
    const PolicyDistribution c = softmax(found.best_point);
    diag.probs.assign(c.probs().begin(), c.probs().end());
    diag.objective = found.best_value;
    diag.v_hat_wis = totals.v_hat_wis(c);
    diag.v_hat_is = totals.v_hat_is(c);
    diag.entropy = entropy(c);
    diag.effective_sample_size = totals.effective_sample_size(c);
    diag.generation_best = found.history;
    result.iterations.push_back(std::move(diag));
    result.omega = found.best_point;
    result.best_objective = found.best_value;
    result.strategy = found.strategy.describe();

    if (round < config.iterations) {
      std::vector<RolloutLog> fresh = collect(result.omega, round);
      for (RolloutLog& log : fresh) {
        if (log.n_tasks != n_tasks) {
          throw Error(ErrorCode::inconsistent_logs, "collected log '" + log.run_id + "' mismatches");
        }
        logs.push_back(std::move(log));
      }
    }
  }
  return result;
}

std::string format_diagnostics(const ImprovementResult& result, const ImprovementConfig& config) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "lambda: " << config.lambda << '\n';
  out << "improvement_rounds: " << config.iterations << '\n';
  out << "cmaes: population=" << config.cmaes.population << " iterations=" << config.cmaes.iterations
      << " sigma0=" << config.cmaes.sigma0 << " seed=" << config.seed << '\n';
  out << "cmaes_strategy: " << result.strategy << '\n';
  for (const IterationDiagnostics& d : result.iterations) {
    out << "\nround " << d.iteration << '\n';
    out << "  logs: " << d.logs_used << "  steps: " << d.steps_used << '\n';
    out << "  objective: " << d.objective << '\n';
    out << "  v_hat_wis: " << d.v_hat_wis << '\n';
    out << "  v_hat_is: " << d.v_hat_is << '\n';
    out << "  entropy_nats: " << d.entropy << '\n';
    out << "  effective_sample_size: " << d.effective_sample_size << " of " << d.steps_used << '\n';
    out << "  probs:";
    for (double p : d.probs) out << ' ' << p;
    out << "\n  omega:";
    for (double w : d.omega) out << ' ' << w;
    out << "\n  generation_best:";
    for (double v : d.generation_best) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace taskselect
