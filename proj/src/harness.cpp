#include "taskselect/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "taskselect/reward.hpp"

namespace taskselect {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::parse_error,
                "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Reservoir stream kept apart from the task-sampling stream of the same seed.
constexpr std::uint64_t kScalerSeedMix = 0x9E3779B97F4A7C15ULL;

}  // namespace

void validate(const ExperimentSpec& spec) {
  if (spec.seeds.empty()) throw Error(ErrorCode::invalid_argument, "experiment needs at least one seed");
  const std::set<std::uint64_t> distinct(spec.seeds.begin(), spec.seeds.end());
  if (distinct.size() != spec.seeds.size()) {
    throw Error(ErrorCode::invalid_argument, "experiment seeds must be distinct");
  }
  if (spec.record_every < 1) throw Error(ErrorCode::invalid_argument, "record_every must be >= 1");
  validate(spec.env.config);
}

std::vector<std::uint64_t> recorded_steps(std::uint64_t horizon, std::uint64_t every) {
  if (every < 1) throw Error(ErrorCode::invalid_argument, "record_every must be >= 1");
  std::vector<std::uint64_t> steps;
  for (std::uint64_t t = every; t <= horizon; t += every) steps.push_back(t);
  if (horizon % every != 0) steps.push_back(horizon);
  return steps;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::empty, "median of no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::unique_ptr<Policy> resolve_policy(const PolicyDescriptor& desc, const BanditState& env) {
  if (desc.kind == PolicyDescriptor::Kind::oracle) {
    return std::make_unique<StaticPolicy>("oracle", env.oracle, to_json(desc));
  }
  return make_policy(desc, env.n_arms());
}

SeedRun run_seed(const ExperimentSpec& spec, std::uint64_t seed) {
  BanditState env = spec.env;
  env.scores.assign(env.n_arms(), 0.0);
  env.t = 0;
  const std::uint64_t horizon = env.config.horizon;
  const double floor = env.config.loss_floor;

  std::unique_ptr<Policy> policy = resolve_policy(spec.policy, env);
  const bool adaptive = policy->adaptive();
  const bool log_dist = adaptive || spec.log_distribution_for_static;

  Rng rng(seed);
  RewardScaler scaler(seed ^ kScalerSeedMix);
  TaskLossHistory history(env.n_arms());

  SeedRun run;
  run.seed = seed;
  run.pulls.assign(env.n_arms(), 0);
  run.log.run_id = (spec.name.empty() ? policy->name() : spec.name) + "-seed" + std::to_string(seed);
  run.log.seed = seed;
  run.log.n_tasks = env.n_arms();
  run.log.horizon = horizon;
  run.log.policy_descriptor = policy->descriptor();
  run.log.steps.reserve(horizon);

  const std::uint64_t every = spec.record_every;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const PolicyDistribution dist = policy->distribution(t);
    const TaskId task = sample_task(dist, rng);
    const StepScores scores = bandit_step(env, task);
    const double loss_after = bandit_loss(scores.after, floor);
    const double reward = counterfactual_reward(loss_after, history, task);

    if (adaptive) {
      const double raw = prediction_gain(bandit_loss(scores.before, floor), loss_after);
      scaler.observe(raw);
      policy->observe(t, task, scaler.scale(raw));
    }

    StepRecord step;
    step.t = t;
    step.task = task;
    step.propensity = dist[task];
    step.reward = reward;
    step.loss = loss_after;
    if (log_dist) step.full_distribution = dist;
    run.log.steps.push_back(std::move(step));
    ++run.pulls[task.index];

    if (t % every == 0 || t == horizon) run.series.push_back(average_score(env));
  }
  run.final_score = average_score(env);
  return run;
}

AggregateSeries aggregate_runs(const std::vector<SeedRun>& runs, std::uint64_t horizon,
                               std::uint64_t record_every) {
  if (runs.empty()) throw Error(ErrorCode::empty, "no runs to aggregate");
  const std::vector<std::uint64_t> steps = recorded_steps(horizon, record_every);
  AggregateSeries agg;
  agg.points.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::vector<double> at;
    at.reserve(runs.size());
    for (const SeedRun& r : runs) {
      if (r.series.size() != steps.size()) {
        throw Error(ErrorCode::invariant_violation, "run series length mismatch");
      }
      at.push_back(r.series[i]);
    }
    const auto [lo, hi] = std::minmax_element(at.begin(), at.end());
    agg.points.push_back({steps[i], median(at), *lo, *hi});
  }
  return agg;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate(spec);
  ExperimentResult result;
  result.name = spec.name.empty() ? to_string(spec.policy.kind) : spec.name;
  result.runs = map_indices<SeedRun>(spec.execution, spec.seeds.size(),
                                     [&](std::size_t i) { return run_seed(spec, spec.seeds[i]); });
  result.aggregate = aggregate_runs(result.runs, spec.env.config.horizon, spec.record_every);
  return result;
}

std::string log_file_name(const std::string& name, std::uint64_t seed) {
  return name + "_seed" + std::to_string(seed) + ".jsonl";
}

std::string series_file_name(const std::string& name) { return name + "_series.csv"; }

std::vector<fs::path> write_experiment(const ExperimentResult& result, const BanditState& env,
                                       const fs::path& dir) {
  std::vector<fs::path> written;
  try {
    fs::create_directories(dir);
    const fs::path env_path = dir / "env.json";
    write_environment(env, env_path);
    written.push_back(env_path);
    for (const SeedRun& run : result.runs) {
      const fs::path p = dir / log_file_name(result.name, run.seed);
      write_log(run.log, p);
      written.push_back(p);
    }
    const fs::path series_path = dir / series_file_name(result.name);
    write_series(result.aggregate, series_path);
    written.push_back(series_path);
  } catch (...) {
    std::error_code ec;
    for (const fs::path& p : written) fs::remove(p, ec);
    throw;
  }
  return written;
}

// ---------------------------------------------------------------------------

std::string format_series_csv(const AggregateSeries& series) {
  std::string out = "step,median,min,max\n";
  for (const SeriesPoint& p : series.points) {
    out += std::to_string(p.step);
    out += ',';
    out += format_double(p.median);
    out += ',';
    out += format_double(p.min);
    out += ',';
    out += format_double(p.max);
    out += '\n';
  }
  return out;
}

AggregateSeries parse_series_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  AggregateSeries series;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "step,median,min,max") {
        throw Error(ErrorCode::parse_error, "line 1: expected header 'step,median,min,max'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4) {
      throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": expected 4 columns");
    }
    SeriesPoint p;
    std::uint64_t step = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), step);
    if (res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size()) {
      throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": bad step");
    }
    p.step = step;
    p.median = parse_double(cells[1], line_no);
    p.min = parse_double(cells[2], line_no);
    p.max = parse_double(cells[3], line_no);
    if (!series.points.empty() && p.step <= series.points.back().step) {
      throw Error(ErrorCode::parse_error, "line " + std::to_string(line_no) + ": steps must increase");
    }
    series.points.push_back(p);
  }
  if (!header) throw Error(ErrorCode::parse_error, "missing header");
  return series;
}

void write_series(const AggregateSeries& series, const fs::path& path) {
  write_text(path, format_series_csv(series));
}

AggregateSeries read_series(const fs::path& path) {
  try {
    return parse_series_csv(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::io_error) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

std::vector<CompareRow> compare_series(const std::vector<NamedSeries>& series) {
  if (series.empty()) throw Error(ErrorCode::empty, "compare needs at least one series");
  for (const NamedSeries& s : series) {
    if (s.series.points.empty()) {
      throw Error(ErrorCode::invalid_argument, "series '" + s.source + "' has no rows");
    }
  }
  std::vector<std::string> mismatched;
  const auto& ref = series.front().series.points;
  for (const NamedSeries& s : series) {
    const auto& pts = s.series.points;
    bool same = pts.size() == ref.size();
    for (std::size_t i = 0; same && i < pts.size(); ++i) same = pts[i].step == ref[i].step;
    if (!same) mismatched.push_back(s.source.empty() ? s.name : s.source);
  }
  if (!mismatched.empty()) {
    std::string msg = "series horizons differ from '" +
                      (series.front().source.empty() ? series.front().name : series.front().source) +
                      "':";
    for (const auto& m : mismatched) msg += " " + m;
    throw Error(ErrorCode::invalid_argument, msg);
  }

  std::vector<CompareRow> rows;
  for (const NamedSeries& s : series) {
    const SeriesPoint& last = s.series.points.back();
    rows.push_back({s.name, last.median, last.min, last.max});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CompareRow& a, const CompareRow& b) { return a.median > b.median; });
  return rows;
}

std::string format_compare_table(const std::vector<CompareRow>& rows) {
  std::size_t width = std::string("policy").size();
  for (const CompareRow& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "policy" << std::right
      << std::setw(12) << "median" << std::setw(12) << "min" << std::setw(12) << "max" << '\n';
  out << std::fixed << std::setprecision(6);
  for (const CompareRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.name << std::right << std::setw(12)
        << r.median << std::setw(12) << r.min << std::setw(12) << r.max << '\n';
  }
  return out.str();
}

std::string format_merged_csv(const std::vector<NamedSeries>& series) {
  compare_series(series);
  std::string out = "step";
  for (const NamedSeries& s : series) out += "," + s.name + "_median," + s.name + "_min," + s.name + "_max";
  out += '\n';
  const std::size_t rows = series.front().series.points.size();
  for (std::size_t i = 0; i < rows; ++i) {
    out += std::to_string(series.front().series.points[i].step);
    for (const NamedSeries& s : series) {
      const SeriesPoint& p = s.series.points[i];
      out += ',' + format_double(p.median) + ',' + format_double(p.min) + ',' + format_double(p.max);
    }
    out += '\n';
  }
  return out;
}

std::string series_name_from_path(const fs::path& path) {
  std::string stem = path.stem().string();
  const std::string suffix = "_series";
  if (stem.size() > suffix.size() && stem.ends_with(suffix)) stem.resize(stem.size() - suffix.size());
  return stem;
}

// ---------------------------------------------------------------------------

PolicyDescriptor softmax_descriptor(const std::vector<double>& omega) {
  PolicyDescriptor d;
  d.kind = PolicyDescriptor::Kind::softmax;
  d.omega = omega;
  return d;
}

RolloutCollector bandit_collector(const BanditState& env, std::vector<std::uint64_t> seeds,
                                  Execution execution) {
  return [env, seeds = std::move(seeds), execution](const std::vector<double>& omega,
                                                    std::size_t round) {
    ExperimentSpec spec;
    spec.env = env;
    spec.policy = softmax_descriptor(omega);
    spec.name = "collect" + std::to_string(round);
    spec.seeds.clear();
    for (std::uint64_t s : seeds) spec.seeds.push_back(s + 1000 * round);
    spec.execution = execution;
    ExperimentResult r = run_experiment(spec);
    std::vector<RolloutLog> logs;
    for (SeedRun& run : r.runs) logs.push_back(std::move(run.log));
    return logs;
  };
}

std::string format_grid_summary(const std::vector<GridRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "lambda" << std::right << std::setw(14) << "objective"
      << std::setw(14) << "v_hat_wis" << std::setw(14) << "entropy" << std::setw(14) << "ess"
      << std::setw(16) << "median_final" << '\n';
  out << std::fixed << std::setprecision(6);
  for (const GridRow& r : rows) {
    const IterationDiagnostics& d = r.improvement.iterations.back();
    out << std::left << std::setw(10) << r.lambda << std::right << std::setw(14) << d.objective
        << std::setw(14) << d.v_hat_wis << std::setw(14) << r.entropy << std::setw(14)
        << d.effective_sample_size;
    if (r.evaluated) {
      out << std::setw(16) << r.median_final;
    } else {
      out << std::setw(16) << "-";
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

const ExperimentResult& BenchmarkResult::experiment(const std::string& name) const {
  for (const ExperimentResult& e : experiments) {
    if (e.name == name) return e;
  }
  throw Error(ErrorCode::invalid_argument, "no experiment named '" + name + "'");
}

double BenchmarkResult::median_final(const std::string& name) const {
  return experiment(name).aggregate.points.back().median;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config) {
  BenchmarkResult result;
  result.env = bandit_init(config.env);

  auto run_named = [&](const std::string& name, PolicyDescriptor policy) {
    ExperimentSpec spec;
    spec.env = result.env;
    spec.policy = std::move(policy);
    spec.name = name;
    spec.seeds = config.seeds;
    spec.record_every = config.record_every;
    spec.execution = config.execution;
    return run_experiment(spec);
  };

  PolicyDescriptor oracle;
  oracle.kind = PolicyDescriptor::Kind::oracle;
  PolicyDescriptor random;
  random.kind = PolicyDescriptor::Kind::random;
  PolicyDescriptor exp3s;
  exp3s.kind = PolicyDescriptor::Kind::exp3s;
  exp3s.eta = config.eta;
  exp3s.epsilon = config.epsilon;

  result.experiments.push_back(run_named("oracle", oracle));
  result.experiments.push_back(run_named("random", random));
  result.experiments.push_back(run_named("exp3s", exp3s));

  // The uniform-policy runs double as the initial logging data.
  std::vector<RolloutLog> logs;
  for (const SeedRun& r : result.experiments[1].runs) logs.push_back(r.log);

  ImprovementConfig improve;
  improve.lambda = config.lambda;
  improve.iterations = config.improvement_rounds;
  improve.seed = config.optimizer_seed;
  improve.cmaes.population = config.cma_population;
  improve.cmaes.iterations = config.cma_iterations;
  improve.cmaes.sigma0 = config.cma_sigma0;
  improve.cmaes.execution = config.execution;
  result.improvement = improve_policy(std::move(logs), improve,
                                      bandit_collector(result.env, config.seeds, config.execution));

  result.experiments.push_back(run_named("counterfactual", softmax_descriptor(result.improvement.omega)));

  std::vector<NamedSeries> named;
  for (const ExperimentResult& e : result.experiments) named.push_back({e.name, e.aggregate, e.name});
  result.table = compare_series(named);
  return result;
}

}  // namespace taskselect
