#include "taskselect/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace taskselect {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kOracleFloor = 1e-12;

double uniform_in(const Interval& r, Rng& rng) { return r.lo + (r.hi - r.lo) * uniform01(rng); }

}  // namespace

void validate(const BanditConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); };
  if (c.n_arms < 1) fail("n_arms must be >= 1");
  if (c.horizon < 1) fail("horizon must be >= 1");
  if (!(c.alpha_mtl > 0.0) || !std::isfinite(c.alpha_mtl)) fail("alpha_mtl must be positive");
  if (!(c.maxp_range.lo > 0.0 && c.maxp_range.lo <= c.maxp_range.hi && c.maxp_range.hi <= 1.0)) {
    fail("maxp_range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(c.fi_mult_range.lo >= 0.0 && c.fi_mult_range.lo <= c.fi_mult_range.hi &&
        c.fi_mult_range.hi <= 1.0)) {
    fail("fi_mult_range must lie within [0, 1]");
  }
  if (!(c.loss_floor > 0.0 && c.loss_floor <= 1.0)) fail("loss_floor must lie in (0, 1]");
}

BanditState bandit_init(const BanditConfig& config) {
  validate(config);
  const std::size_t n = config.n_arms;
  Rng rng(config.env_seed);
  std::gamma_distribution<double> gamma(config.alpha_mtl, 1.0);

  BanditState state;
  state.config = config;

  std::vector<double> oracle(n);
  for (;;) {
    for (double& g : oracle) g = gamma(rng);
    const double total = std::accumulate(oracle.begin(), oracle.end(), 0.0);
    for (double& g : oracle) g /= total;
    if (*std::min_element(oracle.begin(), oracle.end()) >= kOracleFloor) break;
    ++state.oracle_resamples;
  }
  state.oracle = validate_distribution(oracle);

  const double horizon = static_cast<double>(config.horizon);
  state.maxp.resize(n);
  state.li.resize(n);
  state.fi.resize(n);
  for (std::size_t k = 0; k < n; ++k) state.maxp[k] = uniform_in(config.maxp_range, rng);
  for (std::size_t k = 0; k < n; ++k) state.li[k] = state.maxp[k] / (horizon * state.oracle[k]);
  for (std::size_t k = 0; k < n; ++k) state.fi[k] = uniform_in(config.fi_mult_range, rng) * state.li[k];
  state.scores.assign(n, 0.0);
  state.t = 0;
  return state;
}

StepScores bandit_step(BanditState& state, TaskId chosen) {
  if (chosen.index >= state.n_arms()) throw Error(ErrorCode::invalid_argument, "arm out of range");
  if (state.t >= state.config.horizon) {
    throw Error(ErrorCode::horizon_exceeded,
                "horizon " + std::to_string(state.config.horizon) + " already reached");
  }
  const std::size_t k = chosen.index;
  StepScores out;
  out.before = state.scores[k];
  state.scores[k] = std::min(state.scores[k] + state.li[k], state.maxp[k]);
  for (std::size_t j = 0; j < state.n_arms(); ++j) {
    state.scores[j] = std::max(state.scores[j] - state.fi[j], 0.0);
  }
  out.after = state.scores[k];
  ++state.t;
  return out;
}

double bandit_loss(double score, double floor) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(ErrorCode::invalid_argument, "score must lie in [0, 1]");
  }
  if (!(floor > 0.0)) throw Error(ErrorCode::invalid_argument, "loss floor must be positive");
  return -std::log(std::max(score, floor));
}

double average_score(const BanditState& state) {
  if (state.scores.empty()) return 0.0;
  return std::accumulate(state.scores.begin(), state.scores.end(), 0.0) /
         static_cast<double>(state.scores.size());
}

// ---------------------------------------------------------------------------

std::string to_json(const BanditState& state) {
  const BanditConfig& c = state.config;
  ordered_json j;
  j["env_seed"] = c.env_seed;
  j["n_arms"] = c.n_arms;
  j["horizon"] = c.horizon;
  j["alpha_mtl"] = c.alpha_mtl;
  j["maxp_range"] = {c.maxp_range.lo, c.maxp_range.hi};
  j["fi_mult_range"] = {c.fi_mult_range.lo, c.fi_mult_range.hi};
  j["loss_floor"] = c.loss_floor;
  const auto p = state.oracle.probs();
  j["oracle"] = std::vector<double>(p.begin(), p.end());
  j["maxp"] = state.maxp;
  j["li"] = state.li;
  j["fi"] = state.fi;
  return j.dump(2);
}

BanditState parse_environment(const std::string& text) {
  BanditState state;
  try {
    const auto j = ordered_json::parse(text);
    BanditConfig c;
    c.env_seed = j.at("env_seed").get<std::uint64_t>();
    c.n_arms = j.at("n_arms").get<std::size_t>();
    c.horizon = j.at("horizon").get<std::uint64_t>();
    c.alpha_mtl = j.at("alpha_mtl").get<double>();
    if (j.contains("maxp_range")) {
      const auto r = j.at("maxp_range").get<std::vector<double>>();
      if (r.size() != 2) throw Error(ErrorCode::parse_error, "maxp_range needs two entries");
      c.maxp_range = {r[0], r[1]};
    }
    if (j.contains("fi_mult_range")) {
      const auto r = j.at("fi_mult_range").get<std::vector<double>>();
      if (r.size() != 2) throw Error(ErrorCode::parse_error, "fi_mult_range needs two entries");
      c.fi_mult_range = {r[0], r[1]};
    }
    c.loss_floor = j.value("loss_floor", c.loss_floor);
    validate(c);

    if (!j.contains("oracle")) return bandit_init(c);

    state.config = c;
    state.oracle = validate_distribution(j.at("oracle").get<std::vector<double>>());
    state.maxp = j.at("maxp").get<std::vector<double>>();
    state.li = j.at("li").get<std::vector<double>>();
    state.fi = j.at("fi").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("environment: ") + e.what());
  }
  const std::size_t n = state.config.n_arms;
  if (state.oracle.size() != n || state.maxp.size() != n || state.li.size() != n ||
      state.fi.size() != n) {
    throw Error(ErrorCode::invariant_violation, "environment vectors do not match n_arms");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!(state.maxp[k] > 0.0 && state.maxp[k] <= 1.0) || !(state.li[k] > 0.0) ||
        !(state.fi[k] >= 0.0) || !std::isfinite(state.li[k]) || !std::isfinite(state.fi[k])) {
      throw Error(ErrorCode::invariant_violation, "environment arm " + std::to_string(k) + " is invalid");
    }
  }
  state.scores.assign(n, 0.0);
  state.t = 0;
  return state;
}

void write_environment(const BanditState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << to_json(state) << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

BanditState read_environment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_environment(buf.str());
}

}  // namespace taskselect
