#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taskselect/core.hpp"

namespace taskselect {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BanditConfig {
  std::size_t n_arms = 8;
  std::uint64_t horizon = 5000;
  double alpha_mtl = 2.0;
  Interval maxp_range{0.5, 1.0};
  Interval fi_mult_range{0.0, 0.01};
  double loss_floor = 1e-6;
  std::uint64_t env_seed = 0;
};

void validate(const BanditConfig& config);

/// Synthetic multitask bandit. Selecting arm k adds its learning increment
/// (capped at MaxP_k); every arm then loses its forget increment (floored at 0).
struct BanditState {
  BanditConfig config;
  std::vector<double> scores;
  std::vector<double> maxp;
  std::vector<double> li;
  std::vector<double> fi;
  PolicyDistribution oracle = PolicyDistribution::uniform(1);
  std::uint64_t t = 0;  // steps taken so far
  std::size_t oracle_resamples = 0;

  std::size_t n_arms() const noexcept { return scores.size(); }
};

/// Draws the oracle from a symmetric Dirichlet, then MaxP_k, then the forget
/// multipliers, all from env_seed. Oracle draws with an entry below 1e-12 are
/// discarded and redrawn.
BanditState bandit_init(const BanditConfig& config);

struct StepScores {
  double before = 0.0;
  double after = 0.0;
};

/// Throws Error{horizon_exceeded} once `horizon` steps have been taken.
StepScores bandit_step(BanditState& state, TaskId chosen);

/// -ln(max(score, floor)), reading the score as a model likelihood.
double bandit_loss(double score, double floor);

double average_score(const BanditState& state);

/// Environment descriptor: configuration plus the realized oracle / MaxP /
/// LI / FI vectors, so a run can be audited and replayed exactly.
std::string to_json(const BanditState& state);
BanditState parse_environment(const std::string& text);
void write_environment(const BanditState& state, const std::filesystem::path& path);
BanditState read_environment(const std::filesystem::path& path);

}  // namespace taskselect
