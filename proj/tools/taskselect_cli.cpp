// taskselect: command-line front end for the multitask bandit experiments.
//
//   taskselect env        --env-seed 0 --out env.json
//   taskselect run        --policy exp3s --seeds 0..9 --out runs/
//   taskselect improve    --logs 'runs/random_seed*.jsonl' --lambda 0.2 --out policy.desc
//   taskselect grid       --logs 'runs/random_seed*.jsonl' --out grid/
//   taskselect compare    --series runs/*_series.csv --out table.txt --csv merged.csv
//   taskselect experiment --out bench/
//
// Every command exits 0 on success, 1 on a library error and 2 on a usage error.

#include <glob.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "taskselect/harness.hpp"

namespace fs = std::filesystem;
using namespace taskselect;

namespace {

struct EnvOptions {
  std::string file;
  std::uint64_t env_seed = 0;
  std::size_t n_arms = 8;
  std::uint64_t horizon = 5000;
  double alpha_mtl = 2.0;
};

void add_env_options(CLI::App* cmd, EnvOptions& o, bool with_file = true) {
  if (with_file) cmd->add_option("--env", o.file, "Environment descriptor (JSON)");
  cmd->add_option("--env-seed", o.env_seed, "Seed of the hidden oracle and arm parameters");
  cmd->add_option("--n-arms", o.n_arms, "Number of arms");
  cmd->add_option("--horizon", o.horizon, "Steps per run");
  cmd->add_option("--alpha-mtl", o.alpha_mtl, "Dirichlet concentration of the oracle");
}

BanditState load_env(const EnvOptions& o) {
  if (!o.file.empty()) return read_environment(o.file);
  BanditConfig c;
  c.env_seed = o.env_seed;
  c.n_arms = o.n_arms;
  c.horizon = o.horizon;
  c.alpha_mtl = o.alpha_mtl;
  return bandit_init(c);
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::invalid_argument, "not an unsigned integer: '" + s + "'");
  }
  return v;
}

// "0..9", "3,5,7" or a mix such as "0..4,10".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      seeds.push_back(parse_u64(part));
      continue;
    }
    const std::uint64_t lo = parse_u64(part.substr(0, dots));
    const std::uint64_t hi = parse_u64(part.substr(dots + 2));
    if (hi < lo) throw Error(ErrorCode::invalid_argument, "empty seed range: " + part);
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
  }
  if (seeds.empty()) throw Error(ErrorCode::invalid_argument, "no seeds given");
  return seeds;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty()) {
      throw Error(ErrorCode::invalid_argument, "not a number: '" + part + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::invalid_argument, "empty list");
  return out;
}

// Shell-style expansion; a pattern without matches is kept if it names a file.
std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> files;
  for (const std::string& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == 0) {
      for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw Error(ErrorCode::io_error, "no files match '" + pattern + "'");
    if (rc != 0) throw Error(ErrorCode::io_error, "cannot expand '" + pattern + "'");
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  return files;
}

std::vector<RolloutLog> load_logs(const std::vector<std::string>& patterns) {
  std::vector<RolloutLog> logs;
  for (const fs::path& p : expand_globs(patterns)) logs.push_back(read_log(p));
  return logs;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io_error, "write failed: " + path.string());
}

PolicyDescriptor load_policy(const std::string& arg) {
  if (arg == "random") return {};
  if (arg == "exp3s" || arg == "oracle") {
    return parse_policy_descriptor("{\"type\":\"" + arg + "\"}");
  }
  return read_policy_descriptor(arg);
}

Execution execution_of(bool serial) { return serial ? Execution::serial : Execution::parallel; }

struct CmaOptions {
  std::size_t iterations = 20;
  std::size_t population = 64;
  double sigma0 = 0.5;
  std::uint64_t seed = 0;
};

void add_cma_options(CLI::App* cmd, CmaOptions& o) {
  cmd->add_option("--cma-iters", o.iterations, "CMA-ES generations per round");
  cmd->add_option("--cma-pop", o.population, "CMA-ES population size");
  cmd->add_option("--sigma0", o.sigma0, "Initial CMA-ES step size");
  cmd->add_option("--seed", o.seed, "Optimizer seed");
}

ImprovementConfig improvement_config(const CmaOptions& o, double lambda, std::size_t rounds,
                                     Execution exec) {
  ImprovementConfig cfg;
  cfg.lambda = lambda;
  cfg.iterations = rounds;
  cfg.seed = o.seed;
  cfg.cmaes.iterations = o.iterations;
  cfg.cmaes.population = o.population;
  cfg.cmaes.sigma0 = o.sigma0;
  cfg.cmaes.execution = exec;
  return cfg;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Grid output names: policy_lambda_0.15.desc
std::string lambda_file_name(double lambda) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "policy_lambda_%g.desc", lambda);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-selection policies on a synthetic multitask bandit"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "Run the serial reference paths instead of OpenMP");

  // env
  EnvOptions env_opts;
  std::string env_out = "env.json";
  auto* env_cmd = app.add_subcommand("env", "Draw an environment and write its descriptor");
  add_env_options(env_cmd, env_opts, false);
  env_cmd->add_option("--out", env_out, "Output file");

  // run
  EnvOptions run_env;
  std::string run_policy = "random", run_seeds = "0..9", run_name, run_out = "runs";
  std::uint64_t record_every = 10;
  bool log_dist = false;
  auto* run_cmd = app.add_subcommand("run", "Run one policy over several seeds");
  add_env_options(run_cmd, run_env);
  run_cmd->add_option("--policy", run_policy, "Descriptor file or one of random, exp3s, oracle");
  run_cmd->add_option("--seeds", run_seeds, "Run seeds, e.g. 0..9 or 1,4,7");
  run_cmd->add_option("--record-every", record_every, "Series decimation");
  run_cmd->add_option("--name", run_name, "Output label (defaults to the policy type)");
  run_cmd->add_flag("--log-distribution", log_dist, "Log full distributions for static policies too");
  run_cmd->add_option("--out", run_out, "Output directory");

  // improve
  std::vector<std::string> improve_logs;
  double improve_lambda = 0.2;
  std::size_t improve_rounds = 1;
  CmaOptions improve_cma;
  EnvOptions improve_env;
  std::string collect_seeds = "0..9", improve_out = "policy.desc";
  auto* improve_cmd = app.add_subcommand("improve", "Learn a softmax policy from rollout logs");
  improve_cmd->add_option("--logs", improve_logs, "Log files or glob patterns")->required();
  improve_cmd->add_option("--lambda", improve_lambda, "Entropy regularization weight");
  improve_cmd->add_option("--iterations", improve_rounds,
                          "Improvement rounds; later rounds collect fresh rollouts on the environment");
  add_cma_options(improve_cmd, improve_cma);
  add_env_options(improve_cmd, improve_env);
  improve_cmd->add_option("--collect-seeds", collect_seeds, "Run seeds for fresh rollouts");
  improve_cmd->add_option("--out", improve_out, "Policy descriptor to write");

  // grid
  std::vector<std::string> grid_logs;
  std::string grid_lambdas = "0.1,0.15,0.2,0.25", grid_out = "grid", eval_seeds = "0..9";
  CmaOptions grid_cma;
  EnvOptions grid_env;
  auto* grid_cmd = app.add_subcommand("grid", "Improve over a grid of lambdas");
  grid_cmd->add_option("--logs", grid_logs, "Log files or glob patterns")->required();
  grid_cmd->add_option("--lambdas", grid_lambdas, "Comma-separated lambda values");
  add_cma_options(grid_cmd, grid_cma);
  add_env_options(grid_cmd, grid_env);
  std::size_t grid_rounds = 1;
  grid_cmd->add_option("--iterations", grid_rounds, "Improvement rounds per lambda");
  bool grid_evaluate = false;
  grid_cmd->add_flag("--evaluate", grid_evaluate, "Run each policy on the environment flags");
  grid_cmd->add_option("--eval-seeds", eval_seeds, "Seeds for evaluating each policy (needs an env)");
  grid_cmd->add_option("--out", grid_out, "Output directory");

  // compare
  std::vector<std::string> compare_files;
  std::string compare_out, compare_csv;
  auto* compare_cmd = app.add_subcommand("compare", "Tabulate final scores of series files");
  compare_cmd->add_option("--series", compare_files, "Series CSV files")->required();
  compare_cmd->add_option("--out", compare_out, "Write the table here as well as stdout");
  compare_cmd->add_option("--csv", compare_csv, "Merged per-step CSV");

  // experiment
  EnvOptions bench_env;
  std::string bench_seeds = "0..9", bench_out;
  BenchmarkConfig bench;
  auto* bench_cmd = app.add_subcommand("experiment", "Full oracle/random/exp3s/counterfactual comparison");
  add_env_options(bench_cmd, bench_env, false);
  bench_cmd->add_option("--seeds", bench_seeds, "Run seeds");
  bench_cmd->add_option("--lambda", bench.lambda, "Entropy regularization weight");
  bench_cmd->add_option("--rounds", bench.improvement_rounds, "Improvement rounds");
  bench_cmd->add_option("--cma-iters", bench.cma_iterations, "CMA-ES generations per round");
  bench_cmd->add_option("--cma-pop", bench.cma_population, "CMA-ES population size");
  bench_cmd->add_option("--seed", bench.optimizer_seed, "Optimizer seed");
  bench_cmd->add_option("--out", bench_out, "Write env, logs, series and table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version are reported as "errors" with exit code 0.
    return app.exit(e) == 0 ? 0 : 2;
  }
  const Execution exec = execution_of(serial);

  try {
    if (*env_cmd) {
      write_environment(load_env(env_opts), env_out);
      std::cout << "wrote " << env_out << "\n";
    } else if (*run_cmd) {
      ExperimentSpec spec;
      spec.env = load_env(run_env);
      spec.policy = load_policy(run_policy);
      spec.name = run_name;
      spec.seeds = parse_seeds(run_seeds);
      spec.record_every = record_every;
      spec.log_distribution_for_static = log_dist;
      spec.execution = exec;
      const ExperimentResult result = run_experiment(spec);
      const auto files = write_experiment(result, spec.env, run_out);
      const SeriesPoint& last = result.aggregate.points.back();
      std::cout << result.name << ": final average score median " << format_double(last.median)
                << " [" << format_double(last.min) << ", " << format_double(last.max) << "] over "
                << result.runs.size() << " seeds; " << files.size() << " files in " << run_out
                << "\n";
    } else if (*improve_cmd) {
      std::vector<RolloutLog> logs = load_logs(improve_logs);
      const ImprovementConfig cfg = improvement_config(improve_cma, improve_lambda, improve_rounds, exec);
      RolloutCollector collect;
      if (improve_rounds > 1) {
        // Fresh rollouts come from --env, or from the environment flags.
        collect = bandit_collector(load_env(improve_env), parse_seeds(collect_seeds), exec);
      }
      const ImprovementResult result = improve_policy(std::move(logs), cfg, collect);
      write_policy_descriptor(softmax_descriptor(result.omega), improve_out);
      const std::string report = format_diagnostics(result, cfg);
      write_text(improve_out + ".diagnostics.txt", report);
      std::cout << report;
    } else if (*grid_cmd) {
      const std::vector<RolloutLog> logs = load_logs(grid_logs);
      const std::vector<double> lambdas = parse_doubles(grid_lambdas);
      const bool evaluate = grid_evaluate || !grid_env.file.empty();
      BanditState env;
      if (evaluate) env = load_env(grid_env);
      fs::create_directories(grid_out);
      std::vector<GridRow> rows;
      for (double lambda : lambdas) {
        GridRow row;
        row.lambda = lambda;
        const ImprovementConfig cfg = improvement_config(grid_cma, lambda, grid_rounds, exec);
        RolloutCollector collect;
        if (grid_rounds > 1) collect = bandit_collector(load_env(grid_env), parse_seeds(collect_seeds), exec);
        row.improvement = improve_policy(logs, cfg, collect);
        const PolicyDescriptor desc = softmax_descriptor(row.improvement.omega);
        row.entropy = entropy(softmax(row.improvement.omega));
        write_policy_descriptor(desc, fs::path(grid_out) / lambda_file_name(lambda));
        if (evaluate) {
          ExperimentSpec spec;
          spec.env = env;
          spec.policy = desc;
          spec.seeds = parse_seeds(eval_seeds);
          spec.execution = exec;
          row.evaluated = true;
          row.median_final = run_experiment(spec).aggregate.points.back().median;
        }
        rows.push_back(std::move(row));
      }
      const std::string summary = format_grid_summary(rows);
      write_text(fs::path(grid_out) / "grid_summary.txt", summary);
      std::cout << summary;
    } else if (*compare_cmd) {
      std::vector<NamedSeries> series;
      for (const fs::path& p : expand_globs(compare_files)) {
        series.push_back({series_name_from_path(p), read_series(p), p.string()});
      }
      const std::string table = format_compare_table(compare_series(series));
      std::cout << table;
      if (!compare_out.empty()) write_text(compare_out, table);
      if (!compare_csv.empty()) write_text(compare_csv, format_merged_csv(series));
    } else if (*bench_cmd) {
      bench.env = load_env(bench_env).config;
      bench.seeds = parse_seeds(bench_seeds);
      bench.execution = exec;
      const BenchmarkResult result = run_benchmark(bench);
      const std::string table = format_compare_table(result.table);
      std::cout << table;
      if (!bench_out.empty()) {
        for (const ExperimentResult& e : result.experiments) write_experiment(e, result.env, bench_out);
        write_policy_descriptor(softmax_descriptor(result.improvement.omega),
                                fs::path(bench_out) / "counterfactual.desc");
        write_text(fs::path(bench_out) / "table.txt", table);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
