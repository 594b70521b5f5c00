#include "taskselect/reward.hpp"

#include <algorithm>
#include <cmath>

namespace taskselect {

double prediction_gain(double loss_before, double loss_after) {
  if (!std::isfinite(loss_before) || !std::isfinite(loss_after)) {
    throw Error(ErrorCode::non_finite_input, "prediction gain needs finite losses");
  }
  return loss_before - loss_after;
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorCode::empty_reservoir, "percentile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::invalid_argument, "percentile outside [0, 1]");
  const double rank = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

RewardScaler::RewardScaler(std::uint64_t seed, std::size_t capacity)
    : capacity_(capacity), rng_(seed) {
  if (capacity_ == 0) throw Error(ErrorCode::invalid_argument, "reservoir capacity must be positive");
  reservoir_.reserve(capacity_);
}

void RewardScaler::observe(double raw) {
  if (!std::isfinite(raw)) throw Error(ErrorCode::non_finite_input, "raw reward is not finite");
  if (reservoir_.size() < capacity_) {
    reservoir_.push_back(raw);
    sorted_valid_ = false;
  } else {
    // Keep the new item with probability capacity / (seen + 1).
    const std::uint64_t j = std::uniform_int_distribution<std::uint64_t>(0, seen_)(rng_);
    if (j < capacity_) {
      reservoir_[static_cast<std::size_t>(j)] = raw;
      sorted_valid_ = false;
    }
  }
  ++seen_;
}

const std::vector<double>& RewardScaler::sorted() const {
  if (reservoir_.empty()) throw Error(ErrorCode::empty_reservoir, "no rewards observed yet");
  if (!sorted_valid_) {
    sorted_ = reservoir_;
    std::sort(sorted_.begin(), sorted_.end());
    sorted_valid_ = true;
  }
  return sorted_;
}

double RewardScaler::q20() const { return percentile_sorted(sorted(), 0.2); }
double RewardScaler::q80() const { return percentile_sorted(sorted(), 0.8); }

double RewardScaler::scale(double raw) const {
  const auto& s = sorted();
  return scale_reward(raw, percentile_sorted(s, 0.2), percentile_sorted(s, 0.8));
}

double scale_reward(double raw, double q20, double q80) {
  if (std::isnan(raw)) throw Error(ErrorCode::non_finite_input, "raw reward is NaN");
  if (raw < q20) return -1.0;
  if (raw > q80) return 1.0;
  if (q80 == q20) return 0.0;
  const double v = 2.0 * (raw - q20) / (q80 - q20) - 1.0;
  return std::clamp(v, -1.0, 1.0);
}

double counterfactual_reward(double current_loss, TaskLossHistory& history, TaskId task) {
  if (!std::isfinite(current_loss) || current_loss < 0.0) {
    throw Error(ErrorCode::invalid_argument, "loss must be finite and non-negative");
  }
  const std::optional<double> last = history.last_loss(task);
  history.record(task, current_loss);
  if (!last) return 0.0;
  const double delta = current_loss - *last;
  return delta < 0.0 ? 1.0 - std::exp(-current_loss) : 0.0;
}

}  // namespace taskselect
