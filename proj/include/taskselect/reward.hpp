#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "taskselect/core.hpp"

namespace taskselect {

/// Loss decrease across one training update; positive means the model improved.
double prediction_gain(double loss_before, double loss_after);

/// Linear interpolation at rank p * (n - 1) over an ascending sample.
double percentile_sorted(std::span<const double> sorted, double p);

/// Maps raw rewards into [-1, 1] using the 20th and 80th percentiles of a
/// reservoir sample of the raw reward history.
class RewardScaler {
 public:
  static constexpr std::size_t kDefaultCapacity = 1000;

  explicit RewardScaler(std::uint64_t seed, std::size_t capacity = kDefaultCapacity);

  /// Reservoir sampling (algorithm R).
  void observe(double raw);

  /// Throws Error{empty_reservoir} before the first observation.
  double scale(double raw) const;

  double q20() const;
  double q80() const;

  std::size_t capacity() const noexcept { return capacity_; }
  std::uint64_t seen_count() const noexcept { return seen_; }
  std::span<const double> reservoir() const noexcept { return reservoir_; }

 private:
  const std::vector<double>& sorted() const;

  std::size_t capacity_;
  std::uint64_t seen_ = 0;
  std::vector<double> reservoir_;
  Rng rng_;
  mutable std::vector<double> sorted_;
  mutable bool sorted_valid_ = false;
};

/// Scaling rule against fixed percentiles. Degenerate band (q80 == q20) maps
/// values inside it to 0.
double scale_reward(double raw, double q20, double q80);

/// Last observed loss per task; empty until the task is first sampled.
class TaskLossHistory {
 public:
  explicit TaskLossHistory(std::size_t n_tasks) : last_(n_tasks) {}

  std::optional<double> last_loss(TaskId task) const { return last_.at(task.index); }
  void record(TaskId task, double loss) { last_.at(task.index) = loss; }
  std::size_t n_tasks() const noexcept { return last_.size(); }

 private:
  std::vector<std::optional<double>> last_;
};

/// Reward in [0, 1]: 1 - exp(-loss) when the task's loss strictly dropped since
/// it was last sampled, else 0. The first visit to a task earns 0. Records
/// `current_loss` as the task's latest loss in every case.
double counterfactual_reward(double current_loss, TaskLossHistory& history, TaskId task);

}  // namespace taskselect
