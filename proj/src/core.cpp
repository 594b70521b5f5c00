#include "taskselect/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace taskselect {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string describe_step(std::size_t i, const StepRecord& s) {
  return "step " + std::to_string(i) + " (t=" + std::to_string(s.t) + ")";
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::empty: return "Empty";
    case ErrorCode::negative_probability: return "NegativeProbability";
    case ErrorCode::not_normalized: return "NotNormalized";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::invariant_violation: return "InvariantViolation";
    case ErrorCode::zero_propensity: return "ZeroPropensity";
    case ErrorCode::empty_logs: return "EmptyLogs";
    case ErrorCode::zero_normalizer: return "ZeroNormalizer";
    case ErrorCode::inconsistent_logs: return "InconsistentLogs";
    case ErrorCode::non_finite_objective: return "NonFiniteObjective";
    case ErrorCode::horizon_exceeded: return "HorizonExceeded";
    case ErrorCode::empty_reservoir: return "EmptyReservoir";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

PolicyDistribution PolicyDistribution::uniform(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::empty, "uniform distribution over zero tasks");
  return validate_distribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

PolicyDistribution validate_distribution(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::empty, "distribution has no entries");
  double sum = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!std::isfinite(v[k])) {
      throw Error(ErrorCode::non_finite_input, "entry " + std::to_string(k) + " is not finite");
    }
    if (v[k] < -kNegativeTolerance) {
      throw Error(ErrorCode::negative_probability,
                  "entry " + std::to_string(k) + " = " + std::to_string(v[k]));
    }
    sum += v[k];
  }
  if (std::abs(sum - 1.0) > kNormTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "entries sum to " << sum;
    throw Error(ErrorCode::not_normalized, msg.str());
  }
  // Rounding-level negatives are pinned to zero.
  for (double& p : v) p = std::max(p, 0.0);
  return PolicyDistribution(std::move(v));
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) throw Error(ErrorCode::empty, "log_sum_exp of an empty vector");
  const double m = *std::max_element(x.begin(), x.end());
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

PolicyDistribution softmax(std::span<const double> omega) {
  if (omega.empty()) throw Error(ErrorCode::empty, "softmax of an empty vector");
  for (std::size_t k = 0; k < omega.size(); ++k) {
    if (!std::isfinite(omega[k])) {
      throw Error(ErrorCode::non_finite_input, "omega[" + std::to_string(k) + "] is not finite");
    }
  }
  const double m = *std::max_element(omega.begin(), omega.end());
  std::vector<double> p(omega.size());
  double s = 0.0;
  for (std::size_t k = 0; k < omega.size(); ++k) {
    p[k] = std::exp(omega[k] - m);
    s += p[k];
  }
  for (double& v : p) v /= s;
  return validate_distribution(std::move(p));
}

double entropy(const PolicyDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double total_variation(const PolicyDistribution& a, const PolicyDistribution& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::invalid_argument, "total_variation over distributions of different size");
  }
  double tv = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a[k] - b[k]);
  return 0.5 * tv;
}

TaskId sample_task(const PolicyDistribution& dist, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    if (dist[k] > 0.0) last_positive = k;
    cumulative += dist[k];
    if (u < cumulative) return TaskId{k};
  }
  // u landed in the rounding gap above the final cumulative sum.
  return TaskId{last_positive};
}

void validate_log(const RolloutLog& log) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invariant_violation, msg); };
  if (log.n_tasks == 0) fail("n_tasks must be positive");
  if (log.steps.size() > log.horizon) {
    fail("log has " + std::to_string(log.steps.size()) + " steps but horizon " +
         std::to_string(log.horizon));
  }
  std::uint64_t prev_t = 0;
  for (std::size_t i = 0; i < log.steps.size(); ++i) {
    const StepRecord& s = log.steps[i];
    const std::string where = describe_step(i, s);
    if (s.t <= prev_t) fail(where + ": t must be >= 1 and strictly increasing");
    prev_t = s.t;
    if (s.task.index >= log.n_tasks) fail(where + ": task out of range");
    if (!(s.propensity > 0.0) || s.propensity > 1.0 || !std::isfinite(s.propensity)) {
      fail(where + ": propensity must lie in (0, 1]");
    }
    if (!std::isfinite(s.reward)) fail(where + ": reward is not finite");
    if (s.loss && (!std::isfinite(*s.loss) || *s.loss < 0.0)) {
      fail(where + ": loss must be finite and >= 0");
    }
    if (s.full_distribution) {
      const PolicyDistribution& d = *s.full_distribution;
      if (d.size() != log.n_tasks) fail(where + ": dist has the wrong number of entries");
      if (std::abs(d[s.task] - s.propensity) > 1e-12) {
        fail(where + ": dist[task] disagrees with propensity");
      }
    }
  }
}

std::string serialize_log(const RolloutLog& log) {
  validate_log(log);
  std::string out;
  ordered_json header;
  header["format_version"] = kLogFormatVersion;
  header["run_id"] = log.run_id;
  header["seed"] = log.seed;
  header["n_tasks"] = log.n_tasks;
  header["horizon"] = log.horizon;
  header["policy_descriptor"] = log.policy_descriptor;
  out += header.dump();
  out += '\n';
  for (const StepRecord& s : log.steps) {
    ordered_json line;
    line["t"] = s.t;
    line["task"] = s.task.index;
    line["propensity"] = s.propensity;
    line["reward"] = s.reward;
    if (s.loss) line["loss"] = *s.loss;
    if (s.full_distribution) {
      const auto p = s.full_distribution->probs();
      line["dist"] = std::vector<double>(p.begin(), p.end());
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

RolloutLog parse_log(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  RolloutLog log;

  auto parse_error = [&](const std::string& msg) {
    return Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      if (!j.is_object()) throw parse_error("expected a JSON object");
      if (!have_header) {
        if (j.value("format_version", -1) != kLogFormatVersion) {
          throw parse_error("missing or unsupported format_version");
        }
        log.run_id = j.at("run_id").get<std::string>();
        log.seed = j.at("seed").get<std::uint64_t>();
        log.n_tasks = j.at("n_tasks").get<std::size_t>();
        log.horizon = j.at("horizon").get<std::uint64_t>();
        log.policy_descriptor = j.at("policy_descriptor").get<std::string>();
        have_header = true;
        continue;
      }
      StepRecord s;
      s.t = j.at("t").get<std::uint64_t>();
      s.task = TaskId{j.at("task").get<std::size_t>()};
      s.propensity = j.at("propensity").get<double>();
      s.reward = j.at("reward").get<double>();
      if (j.contains("loss")) s.loss = j.at("loss").get<double>();
      if (j.contains("dist")) {
        try {
          s.full_distribution = validate_distribution(j.at("dist").get<std::vector<double>>());
        } catch (const Error& e) {
          throw Error(ErrorCode::invariant_violation,
                      "line " + std::to_string(line_no) + ": " + e.what());
        }
      }
      log.steps.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw parse_error(e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::parse_error, "missing header line");
  validate_log(log);
  return log;
}

void write_log(const RolloutLog& log, const std::filesystem::path& path) {
  const std::string text = serialize_log(log);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

RolloutLog read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_log(buf.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace taskselect
