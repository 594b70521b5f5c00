#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "taskselect/core.hpp"
#include "test_util.hpp"

using namespace taskselect;
using taskselect::testing::random_vector;

TEST_CASE("validate_distribution accepts and rejects") {
  CHECK(validate_distribution({0.25, 0.25, 0.25, 0.25}).size() == 4);
  CHECK(validate_distribution({1.0, 0.0, 0.0})[0] == 1.0);
  CHECK_THROWS_CODE(validate_distribution({0.5, 0.6}), ErrorCode::not_normalized);
  CHECK_THROWS_CODE(validate_distribution({}), ErrorCode::empty);
  CHECK_THROWS_CODE(validate_distribution({1.1, -0.1}), ErrorCode::negative_probability);
  CHECK_THROWS_CODE(validate_distribution({NAN, 1.0}), ErrorCode::non_finite_input);
  // Rounding-sized negatives are tolerated and clipped.
  const auto d = validate_distribution({1.0 + 1e-13, -1e-13});
  CHECK(d[1] == 0.0);
}

TEST_CASE("softmax examples") {
  const auto u = softmax(std::vector<double>{0, 0, 0, 0});
  for (double p : u.probs()) CHECK(p == doctest::Approx(0.25).epsilon(1e-15));

  for (double c : {-40.0, 0.0, 3.5, 400.0}) {
    const auto d = softmax(std::vector<double>{c, c, c});
    for (double p : d.probs()) CHECK(std::abs(p - 1.0 / 3.0) < 1e-15);
  }

  const auto two = softmax(std::vector<double>{std::log(2.0), 0.0});
  CHECK(std::abs(two[0] - 2.0 / 3.0) < 1e-15);
  CHECK(std::abs(two[1] - 1.0 / 3.0) < 1e-15);

  CHECK_THROWS_CODE(softmax(std::vector<double>{0.0, INFINITY}), ErrorCode::non_finite_input);
  CHECK_THROWS_CODE(softmax(std::vector<double>{}), ErrorCode::empty);
}

TEST_CASE("softmax properties over random logits") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const auto omega = random_vector(gen, n, -500.0, 500.0);
    const auto p = softmax(omega);  // validates internally
    CHECK(p.size() == n);

    const double shift = std::uniform_real_distribution<double>(-50.0, 50.0)(gen);
    auto shifted = omega;
    for (double& w : shifted) w += shift;
    const auto q = softmax(shifted);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(p[k] - q[k]) < 1e-12);
  }
}

TEST_CASE("entropy examples and bounds") {
  CHECK(std::abs(entropy(PolicyDistribution::uniform(8)) - 2.0794415416798359) < 1e-12);
  CHECK(entropy(validate_distribution({0.0, 1.0, 0.0})) == 0.0);
  CHECK(std::abs(entropy(validate_distribution({0.5, 0.5, 0.0, 0.0})) - 0.69314718055994531) < 1e-15);

  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 9;
    const auto omega = random_vector(gen, n, -4.0, 4.0);
    const double h = entropy(softmax(omega));
    CHECK(h >= 0.0);
    CHECK(h < std::log(static_cast<double>(n)) - 1e-12);  // unequal logits: strictly below max

    const std::vector<double> flat(n, omega[0]);
    CHECK(std::abs(entropy(softmax(flat)) - std::log(static_cast<double>(n))) < 1e-12);
  }
}

TEST_CASE("sample_task contracts") {
  Rng rng(1);
  const auto onehot = validate_distribution({0.0, 0.0, 1.0, 0.0});
  for (int i = 0; i < 1000; ++i) CHECK(sample_task(onehot, rng).index == 2);

  // Uniform over 4: each frequency within [0.24, 0.26] over 1e5 draws.
  const auto uni = PolicyDistribution::uniform(4);
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 100000; ++i) ++counts[sample_task(uni, rng).index];
  for (int c : counts) {
    CHECK(c >= 24000);
    CHECK(c <= 26000);
  }

  // Same seed, same sequence.
  Rng a(99), b(99);
  const auto d = validate_distribution({0.1, 0.2, 0.3, 0.4});
  for (int i = 0; i < 1000; ++i) CHECK(sample_task(d, a) == sample_task(d, b));
}

TEST_CASE("sample_task frequencies pass a chi-square test") {
  const std::vector<double> probs{0.05, 0.15, 0.3, 0.5};
  const auto d = validate_distribution(probs);
  Rng rng(2024);
  const int draws = 100000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < draws; ++i) ++counts[sample_task(d, rng).index];
  double chi2 = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double expected = probs[k] * draws;
    chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  // Critical value of chi^2 with 3 degrees of freedom at alpha = 0.001.
  CHECK(chi2 < 16.266);
}

namespace {

RolloutLog golden_log() {
  RolloutLog log;
  log.run_id = "golden";
  log.seed = 7;
  log.n_tasks = 3;
  log.horizon = 10;
  log.policy_descriptor = R"({"type":"random","params":{"n":3}})";
  StepRecord a;
  a.t = 1;
  a.task = TaskId{0};
  a.propensity = 1.0 / 3.0;
  a.reward = 0.0;
  a.loss = 13.815510557964274;
  a.full_distribution = PolicyDistribution::uniform(3);
  StepRecord b;
  b.t = 2;
  b.task = TaskId{2};
  b.propensity = 0.5;
  b.reward = 0.25;
  b.loss = 0.1;
  StepRecord c;
  c.t = 3;
  c.task = TaskId{1};
  c.propensity = 0.125;
  c.reward = 1.0;
  log.steps = {a, b, c};
  return log;
}

constexpr const char* kGoldenText =
    R"({"format_version":1,"run_id":"golden","seed":7,"n_tasks":3,"horizon":10,"policy_descriptor":"{\"type\":\"random\",\"params\":{\"n\":3}}"})"
    "\n"
    R"({"t":1,"task":0,"propensity":0.3333333333333333,"reward":0.0,"loss":13.815510557964274,"dist":[0.3333333333333333,0.3333333333333333,0.3333333333333333]})"
    "\n"
    R"({"t":2,"task":2,"propensity":0.5,"reward":0.25,"loss":0.1})"
    "\n"
    R"({"t":3,"task":1,"propensity":0.125,"reward":1.0})"
    "\n";

}  // namespace

TEST_CASE("rollout log golden serialization") {
  const RolloutLog log = golden_log();
  CHECK(serialize_log(log) == kGoldenText);
  const RolloutLog back = parse_log(kGoldenText);
  CHECK(back == log);
  CHECK(serialize_log(back) == kGoldenText);
}

TEST_CASE("rollout log round trip through files") {
  const auto dir = std::filesystem::temp_directory_path() / "taskselect_test_core";
  std::filesystem::create_directories(dir);

  RolloutLog empty;
  empty.run_id = "empty";
  empty.n_tasks = 2;
  empty.horizon = 5;
  write_log(empty, dir / "empty.jsonl");
  CHECK(read_log(dir / "empty.jsonl") == empty);

  // Randomized logs: full-precision numbers survive the trip exactly.
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    RolloutLog log;
    log.run_id = "trial" + std::to_string(trial);
    log.seed = gen();
    log.n_tasks = 5;
    log.horizon = 200;
    log.policy_descriptor = "{}";
    for (std::uint64_t t = 1; t <= 150; ++t) {
      const auto d = taskselect::testing::random_distribution(gen, 5);
      StepRecord s;
      s.t = t * 1 + (trial % 2);
      s.task = TaskId{static_cast<std::size_t>(gen() % 5)};
      s.propensity = d[s.task];
      s.reward = std::uniform_real_distribution<double>(-1.0, 1.0)(gen);
      if (t % 3) s.loss = std::uniform_real_distribution<double>(0.0, 20.0)(gen);
      if (t % 2) s.full_distribution = d;
      log.steps.push_back(s);
    }
    const auto path = dir / "random.jsonl";
    write_log(log, path);
    CHECK(read_log(path) == log);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("rollout log read errors") {
  const std::string header =
      R"({"format_version":1,"run_id":"x","seed":0,"n_tasks":2,"horizon":5,"policy_descriptor":""})"
      "\n";

  CHECK_THROWS_CODE(parse_log(header + R"({"t":1,"task":0,"propensity":0.0,"reward":1.0})" "\n"),
                    ErrorCode::invariant_violation);
  CHECK_THROWS_CODE(parse_log(header + R"({"t":1,"task":5,"propensity":0.5,"reward":1.0})" "\n"),
                    ErrorCode::invariant_violation);
  CHECK_THROWS_CODE(parse_log(header + R"({"t":2,"task":0,"propensity":0.5,"reward":1.0})" "\n" +
                              R"({"t":2,"task":0,"propensity":0.5,"reward":1.0})" "\n"),
                    ErrorCode::invariant_violation);
  CHECK_THROWS_CODE(
      parse_log(header + R"({"t":1,"task":0,"propensity":0.5,"reward":1.0,"dist":[0.4,0.6]})" "\n"),
      ErrorCode::invariant_violation);
  CHECK_THROWS_CODE(parse_log(R"({"run_id":"x"})" "\n"), ErrorCode::parse_error);
  CHECK_THROWS_CODE(parse_log(""), ErrorCode::parse_error);

  try {
    parse_log(header + R"({"t":1,"task":0,"propensity":0.5,"reward":1.0})" "\n" + "{not json\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse_error);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_CODE(parse_log(header + R"({"t":1,"task":0,"reward":1.0})" "\n"), ErrorCode::parse_error);
  CHECK_THROWS_CODE(read_log("/nonexistent/dir/log.jsonl"), ErrorCode::io_error);
}
