#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "taskselect/parallel.hpp"

namespace taskselect {

enum class OptimizeMode { minimize, maximize };

struct CmaesConfig {
  std::size_t dimension = 1;
  std::size_t population = 64;
  std::size_t iterations = 20;
  double sigma0 = 0.5;
  std::uint64_t seed = 0;
  OptimizeMode mode = OptimizeMode::minimize;
  /// Starting mean; empty means the zero vector.
  std::vector<double> initial_mean;
  Execution execution = Execution::parallel;
};

/// Throws invalid_argument when the configuration is unusable.
void validate(const CmaesConfig& config);

/// Strategy parameters of the (mu/mu_w, lambda)-CMA-ES, derived from the
/// dimension and population size with the usual default formulas.
struct CmaesStrategy {
  std::size_t mu = 0;
  std::vector<double> weights;  // positive recombination weights, sum to 1
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;

  static CmaesStrategy defaults(std::size_t dimension, std::size_t population);
  std::string describe() const;
};

struct CmaesResult {
  std::vector<double> best_point;
  double best_value = 0.0;
  /// Best objective value sampled in each generation.
  std::vector<double> history;
  /// Running best-so-far after each generation.
  std::vector<double> best_so_far;
  /// Best point of each generation, in generation order.
  std::vector<std::vector<double>> generation_best_points;
  std::size_t evaluations = 0;
  double final_sigma = 0.0;
  CmaesStrategy strategy;
};

/// Must be safe to call concurrently from several threads.
using Objective = std::function<double(const std::vector<double>&)>;

/// Deterministic given (objective, config). Candidate evaluations within a
/// generation run through map_indices(config.execution, ...). Throws
/// Error{non_finite_objective} with the offending point if f returns NaN/inf.
CmaesResult cmaes_optimize(const Objective& f, const CmaesConfig& config);

}  // namespace taskselect
