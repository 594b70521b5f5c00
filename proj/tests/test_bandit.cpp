#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "taskselect/bandit.hpp"
#include "test_util.hpp"

using namespace taskselect;

namespace {

BanditState hand_state() {
  BanditConfig c;
  c.n_arms = 3;
  c.horizon = 1000;
  BanditState s = bandit_init(c);
  s.maxp = {0.8, 0.6, 0.9};
  s.li = {0.004, 0.01, 0.002};
  s.fi = {0.00001, 0.0, 0.0001};
  return s;
}

}  // namespace

TEST_CASE("init draws a valid, reproducible environment") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    BanditConfig c;
    c.env_seed = seed;
    const BanditState s = bandit_init(c);
    CHECK(s.n_arms() == 8);
    double total = 0.0;
    for (double p : s.oracle.probs()) {
      CHECK(p >= 1e-12);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (std::size_t k = 0; k < 8; ++k) {
      CHECK(s.scores[k] == 0.0);
      CHECK(s.maxp[k] >= 0.5);
      CHECK(s.maxp[k] <= 1.0);
      CHECK(s.li[k] == s.maxp[k] / (static_cast<double>(c.horizon) * s.oracle[k]));
      CHECK(s.fi[k] >= 0.0);
      CHECK(s.fi[k] <= 0.01 * s.li[k]);
    }
    const BanditState again = bandit_init(c);
    CHECK(again.oracle == s.oracle);
    CHECK(again.maxp == s.maxp);
    CHECK(again.fi == s.fi);
  }
  BanditConfig a, b;
  b.env_seed = 1;
  CHECK_FALSE(bandit_init(a).oracle == bandit_init(b).oracle);
}

TEST_CASE("learning increment formula") {
  // MaxP 0.8, T 1000, oracle 0.2.
  CHECK(0.8 / (1000.0 * 0.2) == doctest::Approx(0.004).epsilon(1e-15));
}

TEST_CASE("config validation") {
  BanditConfig c;
  c.maxp_range = {0.0, 1.0};
  CHECK_THROWS_CODE(bandit_init(c), ErrorCode::invalid_argument);
  c = BanditConfig{};
  c.fi_mult_range = {0.0, 1.5};
  CHECK_THROWS_CODE(bandit_init(c), ErrorCode::invalid_argument);
  c = BanditConfig{};
  c.horizon = 0;
  CHECK_THROWS_CODE(bandit_init(c), ErrorCode::invalid_argument);
  c = BanditConfig{};
  c.alpha_mtl = -1.0;
  CHECK_THROWS_CODE(bandit_init(c), ErrorCode::invalid_argument);
}

TEST_CASE("single step arithmetic and clamps") {
  BanditState s = hand_state();
  const StepScores first = bandit_step(s, TaskId{0});
  CHECK(first.before == 0.0);
  CHECK(std::abs(first.after - 0.00399) < 1e-15);
  CHECK(s.scores[1] == 0.0);  // unselected arm stays at the floor
  CHECK(s.scores[2] == 0.0);
  CHECK(s.t == 1);

  s.scores[0] = s.maxp[0];
  const StepScores capped = bandit_step(s, TaskId{0});
  CHECK(capped.before == s.maxp[0]);
  CHECK(capped.after == s.maxp[0] - s.fi[0]);
}

TEST_CASE("horizon is enforced") {
  BanditConfig c;
  c.horizon = 3;
  BanditState s = bandit_init(c);
  for (int i = 0; i < 3; ++i) bandit_step(s, TaskId{0});
  CHECK_THROWS_CODE(bandit_step(s, TaskId{0}), ErrorCode::horizon_exceeded);
  CHECK_THROWS_CODE(bandit_step(s, TaskId{9}), ErrorCode::invalid_argument);
}

TEST_CASE("bandit loss") {
  CHECK(bandit_loss(1.0, 1e-6) == 0.0);
  CHECK(std::abs(bandit_loss(std::exp(-1.0), 1e-6) - 1.0) < 1e-15);
  CHECK(std::abs(bandit_loss(0.0, 1e-6) - 13.815510557964274104) < 1e-12);
  CHECK_THROWS_CODE(bandit_loss(1.5, 1e-6), ErrorCode::invalid_argument);
  CHECK_THROWS_CODE(bandit_loss(-0.1, 1e-6), ErrorCode::invalid_argument);
}

TEST_CASE("average score") {
  BanditState s = hand_state();
  CHECK(average_score(s) == 0.0);
  s.scores = s.maxp;
  CHECK(average_score(s) == doctest::Approx((0.8 + 0.6 + 0.9) / 3.0).epsilon(1e-15));
  s.scores = {0.2, 0.4};
  CHECK(average_score(s) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("scores stay within [0, MaxP] under random play") {
  std::mt19937_64 gen(1);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    BanditConfig c;
    c.env_seed = seed;
    c.horizon = 3000;
    c.fi_mult_range = {0.0, 1.0};  // heavy forgetting exercises the lower clamp
    BanditState s = bandit_init(c);
    for (std::uint64_t t = 0; t < c.horizon; ++t) {
      bandit_step(s, TaskId{static_cast<std::size_t>(gen() % s.n_arms())});
      for (std::size_t k = 0; k < s.n_arms(); ++k) {
        REQUIRE(s.scores[k] >= 0.0);
        REQUIRE(s.scores[k] <= s.maxp[k]);
      }
    }
  }
}

TEST_CASE("without forgetting, ceil(T * oracle) pulls reach MaxP exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    BanditConfig c;
    c.n_arms = 3;
    c.horizon = 600;
    c.env_seed = seed;
    c.fi_mult_range = {0.0, 0.0};
    const BanditState init = bandit_init(c);
    for (std::size_t k = 0; k < 3; ++k) {
      BanditState s = init;
      const auto pulls = static_cast<std::uint64_t>(std::ceil(c.horizon * s.oracle[k]));
      double prev = 0.0;
      for (std::uint64_t i = 0; i < pulls; ++i) {
        const StepScores st = bandit_step(s, TaskId{k});
        CHECK(st.after >= prev);
        CHECK(st.after <= s.maxp[k]);
        prev = st.after;
      }
      CHECK(std::abs(s.scores[k] - s.maxp[k]) < 1e-12);
      // One pull short of the ceiling leaves the arm below MaxP.
      BanditState short_of = init;
      for (std::uint64_t i = 0; i + 1 < pulls; ++i) bandit_step(short_of, TaskId{k});
      CHECK(short_of.scores[k] < short_of.maxp[k]);
    }
  }
}

TEST_CASE("trajectories depend only on env seed and actions") {
  BanditConfig c;
  c.env_seed = 42;
  BanditState a = bandit_init(c), b = bandit_init(c);
  std::mt19937_64 gen(5);
  for (int t = 0; t < 2000; ++t) {
    const TaskId k{static_cast<std::size_t>(gen() % 8)};
    const StepScores sa = bandit_step(a, k), sb = bandit_step(b, k);
    CHECK(sa.after == sb.after);
  }
  CHECK(a.scores == b.scores);
}

TEST_CASE("environment descriptor round trip") {
  BanditConfig c;
  c.env_seed = 17;
  c.horizon = 1234;
  const BanditState s = bandit_init(c);
  const BanditState back = parse_environment(to_json(s));
  CHECK(back.oracle == s.oracle);
  CHECK(back.maxp == s.maxp);
  CHECK(back.li == s.li);
  CHECK(back.fi == s.fi);
  CHECK(back.config.horizon == 1234);
  CHECK(back.config.env_seed == 17);

  // Without realized vectors the environment is redrawn from its seed.
  const BanditState drawn = parse_environment(R"({"env_seed":17,"n_arms":8,"horizon":1234,"alpha_mtl":2.0})");
  CHECK(drawn.li == s.li);

  CHECK_THROWS_CODE(parse_environment("{"), ErrorCode::parse_error);
  CHECK_THROWS_CODE(parse_environment(R"({"env_seed":1,"n_arms":2,"horizon":10,"alpha_mtl":2.0,)"
                                      R"("oracle":[0.5,0.5],"maxp":[0.7],"li":[0.1,0.1],"fi":[0,0]})"),
                    ErrorCode::invariant_violation);
}
