#include <doctest.h>

#include <cmath>
#include <random>

#include "hems/safety/safety_layer.hpp"
#include "oracles.hpp"

using namespace hems;

namespace {

SafetyContext base_context() {
  SafetyContext c;
  c.house = HouseConfig::reference(1);
  c.bess_soc = 0.5;
  c.ev_soc = 0.5;
  c.ev_soc_goal = 1.0;
  return c;
}

ActionPair pair(double bess, double ev) { return ActionPair{BessCommand::power(bess), ev}; }

}  // namespace

TEST_CASE("correct_actions: grid-limit example") {
  auto c = base_context();
  c.load_kw = 2.0;
  const auto r = correct_actions(pair(-3.0, 7.4), c);
  CHECK(r.activated);
  CHECK(r.feasible);
  CHECK(r.safe_actions.bess.kw() == doctest::Approx(-1.4).epsilon(1e-9));
  CHECK(r.safe_actions.ev_kw == doctest::Approx(5.8).epsilon(1e-9));
  CHECK(r.distance == doctest::Approx(2.56e6).epsilon(1e-9));

  const auto oracle_answer = oracle::safety_grid_search({2000, 0, 9200, 3200, 3200, 7400, -3000, 7400});
  CHECK(oracle_answer.bess_w == -1400);
  CHECK(oracle_answer.ev_w == 5800);
}

TEST_CASE("apply_safety: the grid-limit example exceeds the W2 threshold") {
  auto c = base_context();
  c.load_kw = 2.0;
  auto r = apply_safety(pair(-3.0, 7.4), c);
  CHECK(r.fallback_used);
  CHECK(r.activated);
  CHECK(r.safe_actions.bess.is_self_consumption());

  r = apply_safety(pair(-3.0, 7.4), c, 1e7);
  CHECK_FALSE(r.fallback_used);
  CHECK(r.safe_actions.bess.kw() == doctest::Approx(-1.4).epsilon(1e-9));
}

TEST_CASE("feasible proposals pass through") {
  auto c = base_context();
  c.load_kw = 1.0;
  c.pv_kw = 2.0;
  const auto p = pair(1.5, 3.0);
  auto r = correct_actions(p, c);
  CHECK_FALSE(r.activated);
  CHECK(r.distance == 0.0);
  CHECK(r.safe_actions.bess.kw() == 1.5);
  CHECK(r.safe_actions.ev_kw == 3.0);
  r = apply_safety(p, c);
  CHECK_FALSE(r.activated);
  CHECK_FALSE(r.fallback_used);
}

TEST_CASE("empty battery cannot discharge") {
  auto c = base_context();
  c.bess_soc = 0.0;
  const auto r = correct_actions(pair(2.0, 0.0), c);
  CHECK(r.safe_actions.bess.kw() <= 0.0);
  CHECK(r.activated);
}

TEST_CASE("fallback_policy") {
  auto c = base_context();
  c.bess_soc = 0.0;
  c.load_kw = 8.0;
  auto f = fallback_policy(c);
  CHECK(f.bess.is_self_consumption());
  CHECK(f.ev_kw == doctest::Approx(1.2).epsilon(1e-9));

  c.load_kw = 0.0;
  f = fallback_policy(c);
  CHECK(f.ev_kw == doctest::Approx(7.4).epsilon(1e-9));

  c.ev_soc.reset();
  c.ev_soc_goal.reset();
  f = fallback_policy(c);
  CHECK(f.bess.is_self_consumption());
  CHECK(f.ev_kw == 0.0);
}

TEST_CASE("infeasible context falls back") {
  auto c = base_context();
  c.bess_soc = 0.0;
  c.load_kw = 20.0;
  const auto r = correct_actions(pair(0.0, 0.0), c);
  CHECK_FALSE(r.feasible);
  CHECK(std::isinf(r.distance));
  const auto a = apply_safety(pair(0.0, 0.0), c);
  CHECK(a.fallback_used);
  CHECK(a.activated);
}

TEST_CASE("apparent-power limit") {
  auto c = base_context();
  c.mode = GridLimitMode::ApparentPower;
  c.reactive_kvar = 3.0;
  CHECK(c.active_limit_kw() == doctest::Approx(std::sqrt(9.2 * 9.2 - 9.0)).epsilon(1e-12));
  c.reactive_kvar = 10.0;
  CHECK(c.active_limit_kw() < 0.0);
  c.mode = GridLimitMode::ActivePower;
  CHECK(c.active_limit_kw() == doctest::Approx(9.2));

  c.mode = GridLimitMode::ApparentPower;
  c.reactive_kvar = 3.0;
  c.load_kw = 2.0;
  const auto r = correct_actions(pair(-3.0, 7.4), c);
  CHECK(is_feasible(r.safe_actions, c));
  const double p = grid_power(c.load_kw, r.safe_actions.ev_kw, 0.0, r.safe_actions.bess.kw());
  CHECK(p * p + 9.0 <= 9.2 * 9.2 + 1e-6);
}

TEST_CASE("self-consumption resolves to a numeric setpoint") {
  auto c = base_context();
  c.load_kw = 1.0;
  c.pv_kw = 3.0;
  const auto r = resolve_actions(ActionPair{}, c);
  CHECK(r.bess.kw() == doctest::Approx(-2.0));
}

TEST_CASE("distance is non-increasing in the grid limit") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    auto c = base_context();
    c.load_kw = 10 * u(rng);
    c.pv_kw = 6 * u(rng);
    c.bess_soc = u(rng);
    const auto p = pair(-3.2 + 6.4 * u(rng), 7.4 * u(rng));
    double prev = std::numeric_limits<double>::infinity();
    for (double limit = 2.0; limit <= 14.0; limit += 1.0) {
      c.house.grid_limit_active_kw = limit;
      const double d = correct_actions(p, c).distance;
      CHECK(d <= prev + 1e-6);
      prev = d;
    }
  }
}

TEST_CASE("fallback self-consumption never exports stored energy") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    auto c = base_context();
    c.pv_kw = 6 * u(rng);
    c.load_kw = c.pv_kw * u(rng);
    c.bess_soc = u(rng);
    const auto f = resolve_actions(fallback_policy(c), c);
    const double g = grid_power(c.load_kw, f.ev_kw, c.pv_kw, f.bess.kw());
    INFO("pv ", c.pv_kw, " load ", c.load_kw, " ev ", f.ev_kw, " bess ", f.bess.kw());
    if (f.bess.kw() > 0.0) CHECK(g <= 1e-9);
  }
}
