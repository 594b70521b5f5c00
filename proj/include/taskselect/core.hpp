#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace taskselect {

enum class ErrorCode {
  empty,
  negative_probability,
  not_normalized,
  non_finite_input,
  invalid_argument,
  io_error,
  parse_error,
  invariant_violation,
  zero_propensity,
  empty_logs,
  zero_normalizer,
  inconsistent_logs,
  non_finite_objective,
  horizon_exceeded,
  empty_reservoir,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Absolute tolerance on the sum of a distribution.
inline constexpr double kNormTolerance = 1e-9;
// Entries below this are rejected as negative rather than treated as rounding.
inline constexpr double kNegativeTolerance = 1e-12;

/// Index of a task (bandit arm) in [0, N).
struct TaskId {
  std::size_t index = 0;
  friend bool operator==(TaskId, TaskId) = default;
  friend auto operator<=>(TaskId, TaskId) = default;
};

/// A probability vector over N tasks. Only constructible through validation,
/// so every instance satisfies the non-negativity and normalization rules.
class PolicyDistribution {
 public:
  static PolicyDistribution uniform(std::size_t n);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  double operator[](TaskId k) const { return probs_[k.index]; }
  std::span<const double> probs() const& noexcept { return probs_; }
  // A span into a temporary would dangle.
  std::span<const double> probs() const&& = delete;

  friend bool operator==(const PolicyDistribution&, const PolicyDistribution&) = default;

 private:
  explicit PolicyDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;

  friend PolicyDistribution validate_distribution(std::vector<double> v);
};

/// Throws Error{empty | negative_probability | not_normalized | non_finite_input}.
PolicyDistribution validate_distribution(std::vector<double> v);

/// Stable log(sum(exp(x))). Throws on empty input.
double log_sum_exp(std::span<const double> x);

/// Max-subtracted softmax; throws Error{non_finite_input}.
PolicyDistribution softmax(std::span<const double> omega);

/// Shannon entropy in nats, with 0 ln 0 = 0.
double entropy(const PolicyDistribution& dist);

/// Total-variation distance; sizes must match.
double total_variation(const PolicyDistribution& a, const PolicyDistribution& b);

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw; the lowest index wins at cumulative-sum ties.
TaskId sample_task(const PolicyDistribution& dist, Rng& rng);

struct StepRecord {
  std::uint64_t t = 1;
  TaskId task;
  double propensity = 1.0;
  double reward = 0.0;
  std::optional<double> loss;
  std::optional<PolicyDistribution> full_distribution;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RolloutLog {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t n_tasks = 0;
  std::uint64_t horizon = 0;
  std::string policy_descriptor;
  std::vector<StepRecord> steps;

  friend bool operator==(const RolloutLog&, const RolloutLog&) = default;
};

/// Throws Error{invariant_violation} naming the first offending step.
void validate_log(const RolloutLog& log);

inline constexpr int kLogFormatVersion = 1;

/// One JSON object per line: a header, then one line per step.
std::string serialize_log(const RolloutLog& log);
RolloutLog parse_log(const std::string& text);

void write_log(const RolloutLog& log, const std::filesystem::path& path);
RolloutLog read_log(const std::filesystem::path& path);

}  // namespace taskselect
