#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "taskselect/cmaes.hpp"
#include "test_util.hpp"

using namespace taskselect;

namespace {

double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

double rosenbrock(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  }
  return s;
}

CmaesConfig config(std::size_t n, std::size_t iters, std::uint64_t seed = 0) {
  CmaesConfig c;
  c.dimension = n;
  c.population = 64;
  c.iterations = iters;
  c.sigma0 = 0.5;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("strategy defaults") {
  const auto s = CmaesStrategy::defaults(8, 64);
  CHECK(s.mu == 32);
  double sum = 0.0;
  for (std::size_t i = 0; i < s.weights.size(); ++i) {
    sum += s.weights[i];
    if (i > 0) CHECK(s.weights[i] < s.weights[i - 1]);
  }
  CHECK(std::abs(sum - 1.0) < 1e-12);
  CHECK(s.mu_eff > 1.0);
  CHECK(s.mu_eff < 32.0);
  CHECK(s.c_1 + s.c_mu <= 1.0);
}

TEST_CASE("sphere converges") {
  const auto r = cmaes_optimize(sphere, config(8, 100));
  CHECK(r.best_value <= 1e-6);
  CHECK(r.evaluations == 64 * 100);
  CHECK(r.history.size() == 100);
}

TEST_CASE("translated sphere finds its optimum") {
  const auto f = [](const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += (v - 3.0) * (v - 3.0);
    return s;
  };
  const auto r = cmaes_optimize(f, config(4, 100));
  for (double v : r.best_point) CHECK(std::abs(v - 3.0) <= 0.01);
}

TEST_CASE("maximize mode") {
  auto c = config(3, 60);
  c.mode = OptimizeMode::maximize;
  const auto r = cmaes_optimize([](const std::vector<double>& x) { return 5.0 - sphere(x); }, c);
  CHECK(r.best_value > 5.0 - 1e-6);
  for (std::size_t i = 1; i < r.best_so_far.size(); ++i) CHECK(r.best_so_far[i] >= r.best_so_far[i - 1]);
}

TEST_CASE("constant objective") {
  const auto r = cmaes_optimize([](const std::vector<double>&) { return 4.25; }, config(5, 10));
  CHECK(r.best_value == 4.25);
  CHECK(r.best_point.size() == 5);
}

TEST_CASE("deterministic and monotone best-so-far") {
  const auto a = cmaes_optimize(rosenbrock, config(6, 40, 9));
  const auto b = cmaes_optimize(rosenbrock, config(6, 40, 9));
  CHECK(a.best_point == b.best_point);
  CHECK(a.history == b.history);
  for (std::size_t i = 1; i < a.best_so_far.size(); ++i) CHECK(a.best_so_far[i] <= a.best_so_far[i - 1]);
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.best_so_far[i] <= a.history[i]);

  const auto other = cmaes_optimize(rosenbrock, config(6, 40, 10));
  CHECK(other.best_point != a.best_point);
}

TEST_CASE("ranking only depends on the order of values") {
  auto c = config(5, 15, 3);
  const auto plain = cmaes_optimize(rosenbrock, c);
  const auto offset =
      cmaes_optimize([](const std::vector<double>& x) { return rosenbrock(x) + 100.0; }, c);
  CHECK(plain.generation_best_points == offset.generation_best_points);
}

TEST_CASE("serial and parallel evaluation agree exactly") {
  auto c = config(8, 30, 5);
  c.execution = Execution::serial;
  const auto serial = cmaes_optimize(rosenbrock, c);
  c.execution = Execution::parallel;
  const auto parallel = cmaes_optimize(rosenbrock, c);
  CHECK(serial.best_point == parallel.best_point);
  CHECK(serial.history == parallel.history);
}

TEST_CASE("errors") {
  CHECK_THROWS_CODE(cmaes_optimize([](const std::vector<double>& x) { return x[0] > 0.3 ? NAN : 0.0; },
                                   config(2, 20)),
                    ErrorCode::non_finite_objective);
  auto bad = config(2, 10);
  bad.population = 3;
  CHECK_THROWS_CODE(cmaes_optimize(sphere, bad), ErrorCode::invalid_argument);
  bad = config(2, 10);
  bad.sigma0 = 0.0;
  CHECK_THROWS_CODE(cmaes_optimize(sphere, bad), ErrorCode::invalid_argument);
  bad = config(2, 10);
  bad.initial_mean = {1.0};
  CHECK_THROWS_CODE(cmaes_optimize(sphere, bad), ErrorCode::invalid_argument);
}

TEST_CASE("initial mean is honoured") {
  auto c = config(2, 1);
  c.initial_mean = {50.0, -50.0};
  c.sigma0 = 1e-3;
  const auto r = cmaes_optimize(sphere, c);
  CHECK(std::abs(r.best_point[0] - 50.0) < 0.1);
  CHECK(std::abs(r.best_point[1] + 50.0) < 0.1);
}
