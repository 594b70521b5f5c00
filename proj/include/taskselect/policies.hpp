#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "taskselect/core.hpp"

namespace taskselect {

/// Common interface for task-selection policies. Steps are 1-based.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyDistribution distribution(std::uint64_t t) const = 0;

  /// Feed back the (scaled) reward for the task chosen at step t.
  /// Static policies ignore it.
  virtual void observe(std::uint64_t t, TaskId chosen, double scaled_reward) = 0;

  virtual bool adaptive() const noexcept { return false; }
  virtual std::size_t n_tasks() const noexcept = 0;

  /// Short identity such as "random" or "exp3s".
  virtual std::string name() const = 0;
  /// JSON descriptor text that reconstructs this policy.
  virtual std::string descriptor() const = 0;

  virtual std::unique_ptr<Policy> clone() const = 0;
};

/// A policy that emits the same distribution at every step.
class StaticPolicy final : public Policy {
 public:
  StaticPolicy(std::string name, PolicyDistribution dist, std::string descriptor);

  PolicyDistribution distribution(std::uint64_t) const override { return dist_; }
  void observe(std::uint64_t, TaskId, double) override {}
  std::size_t n_tasks() const noexcept override { return dist_.size(); }
  std::string name() const override { return name_; }
  std::string descriptor() const override { return descriptor_; }
  std::unique_ptr<Policy> clone() const override;

 private:
  std::string name_;
  PolicyDistribution dist_;
  std::string descriptor_;
};

std::unique_ptr<Policy> random_policy(std::size_t n);
std::unique_ptr<Policy> task_size_policy(const std::vector<std::uint64_t>& sizes);
std::unique_ptr<Policy> fixed_softmax_policy(const std::vector<double>& omega);

// ---------------------------------------------------------------------------
// Exp3.S
//
// Weights start at zero. `t` is the index of the current weight vector; the
// update that folds in the reward observed while acting with omega_t produces
// omega_{t+1} using the weight-sharing rate alpha_{t+1} = 1 / (t + 1).
// ---------------------------------------------------------------------------

struct Exp3SState {
  std::vector<double> omega;
  double eta = 1e-3;
  double epsilon = 0.05;
  std::uint64_t t = 1;

  std::size_t n_tasks() const noexcept { return omega.size(); }
};

Exp3SState exp3s_init(std::size_t n, double eta, double epsilon);

/// Softmax of the weights before exploration mixing.
PolicyDistribution exp3s_weights_distribution(const Exp3SState& state);

/// Acting distribution: (1 - epsilon) * softmax(omega) + epsilon / N.
PolicyDistribution exp3s_distribution(const Exp3SState& state);

/// Weight-sharing rate used by the next update.
inline double exp3s_alpha(const Exp3SState& state) {
  return 1.0 / static_cast<double>(state.t + 1);
}

/// One Exp3.S weight update, computed in log space.
/// Throws invalid_argument for N < 2, a bad task, or a reward outside [-1, 1].
Exp3SState exp3s_update(Exp3SState state, TaskId chosen, double scaled_reward);

class Exp3SPolicy final : public Policy {
 public:
  Exp3SPolicy(std::size_t n, double eta, double epsilon);
  explicit Exp3SPolicy(Exp3SState state);

  PolicyDistribution distribution(std::uint64_t t) const override;
  void observe(std::uint64_t t, TaskId chosen, double scaled_reward) override;
  bool adaptive() const noexcept override { return true; }
  std::size_t n_tasks() const noexcept override { return state_.n_tasks(); }
  std::string name() const override { return "exp3s"; }
  std::string descriptor() const override;
  std::unique_ptr<Policy> clone() const override;

  const Exp3SState& state() const noexcept { return state_; }

 private:
  Exp3SState state_;
};

// ---------------------------------------------------------------------------
// Policy descriptor files:
//   {"type": "random"|"task_size"|"softmax"|"exp3s"|"oracle", "params": {...}}
// "oracle" has no parameters; it is resolved against an environment by the
// experiment harness.
// ---------------------------------------------------------------------------

struct PolicyDescriptor {
  enum class Kind { random, task_size, softmax, exp3s, oracle };

  Kind kind = Kind::random;
  std::size_t n_tasks = 0;  // random / exp3s; 0 means "take from the environment"
  std::vector<std::uint64_t> sizes;
  std::vector<double> omega;
  double eta = 1e-3;
  double epsilon = 0.05;
};

const char* to_string(PolicyDescriptor::Kind kind) noexcept;

std::string to_json(const PolicyDescriptor& desc);
PolicyDescriptor parse_policy_descriptor(const std::string& text);

void write_policy_descriptor(const PolicyDescriptor& desc, const std::filesystem::path& path);
PolicyDescriptor read_policy_descriptor(const std::filesystem::path& path);

/// Builds the policy. `n_tasks` fills in an unset task count; the oracle kind
/// cannot be built here and throws invalid_argument.
std::unique_ptr<Policy> make_policy(const PolicyDescriptor& desc, std::size_t n_tasks = 0);

}  // namespace taskselect
