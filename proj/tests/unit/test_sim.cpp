#include <doctest.h>

#include <cmath>
#include <random>

#include "hems/control/rbc.hpp"
#include "hems/sim/physics.hpp"
#include "hems/sim/simulator.hpp"
#include "support.hpp"

using namespace hems;
using namespace std::chrono_literals;
using testing_support::FixedController;

TEST_CASE("ev_max_power follows the CC-CV curve") {
  EvParams ev;
  CHECK(ev_max_power(0.5, ev) == doctest::Approx(7.4));
  CHECK(ev_max_power(1.0, ev) == doctest::Approx(1.0));
  CHECK(ev_max_power(0.9, ev) == doctest::Approx(4.2));
  CHECK_THROWS_AS(ev_max_power(1.1, ev), DomainError);
  CHECK_THROWS_AS(ev_max_power(-0.1, ev), DomainError);

  CHECK(ev_max_power(ev.soc_cc_cv + 1e-12, ev) == doctest::Approx(ev.p_max_kw).epsilon(1e-9));
  double prev = ev_max_power(0.0, ev);
  for (int i = 1; i <= 1000; ++i) {
    const double p = ev_max_power(i / 1000.0, ev);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("ev_soc_step") {
  EvParams ev;
  CHECK(ev_soc_step(0.5, 7.4, 0.25, ev) == doctest::Approx(0.5 + 0.95 * 7.4 * 0.25 / 60).epsilon(1e-12));
  CHECK(ev_soc_step(0.7, 0.0, 0.25, ev) == 0.7);
  CHECK(ev_soc_step(0.999, 1.0, 0.25, ev) == 1.0);
  CHECK_THROWS_AS(ev_soc_step(0.9, 7.4, 0.25, ev), DomainError);
}

TEST_CASE("bess_step") {
  const auto h1 = HouseConfig::reference(1);
  auto r = bess_step(0.5, -1.024, 0.25, h1);
  CHECK(r.soc == doctest::Approx(0.5475).epsilon(1e-12));
  CHECK(r.realized_kw == doctest::Approx(-1.024));
  CHECK_FALSE(r.clipped);

  r = bess_step(0.5, 1.024, 0.25, h1);
  CHECK(r.soc == doctest::Approx(0.5 - (1.024 / 0.95) * 0.25 / 5.12).epsilon(1e-12));

  r = bess_step(1.0, -2.0, 0.25, h1);
  CHECK(r.realized_kw == 0.0);
  CHECK(r.soc == 1.0);

  r = bess_step(0.5, -10.0, 0.25, h1);
  CHECK(r.clipped);
  CHECK(r.realized_kw == doctest::Approx(-3.2));

  const auto h4 = HouseConfig::reference(4);
  r = bess_step(0.94, -h4.bess_max_charge_kw, 1.0, h4);
  CHECK(r.soc == doctest::Approx(h4.bess_soc_cap));
  CHECK(r.clipped);
}

TEST_CASE("bess round trip returns eta squared of the stored energy") {
  auto h = HouseConfig::reference(1);
  const double e_in = 2.0 * 0.25;
  const auto c = bess_step(0.2, -2.0, 0.25, h);
  // Discharge until the SOC is back at its start.
  const double soc_gain = c.soc - 0.2;
  const double p_out = soc_gain * h.bess_capacity_kwh * h.bess_efficiency / 0.25;
  const auto d = bess_step(c.soc, p_out, 0.25, h);
  CHECK(d.soc == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(p_out * 0.25 == doctest::Approx(h.bess_efficiency * h.bess_efficiency * e_in).epsilon(1e-9));
}

TEST_CASE("grid_power") {
  CHECK(grid_power(1, 0, 3, 0) == 2.0);
  CHECK(grid_power(0, 0, 0, 0) == 0.0);
  CHECK(grid_power(2, 7.4, 0, -3) == doctest::Approx(-12.4));
}

TEST_CASE("buffer_time") {
  CHECK(buffer_time(1.0, 1.0, 3min, 60min) == Seconds{180});
  CHECK(buffer_time(1.0, 0.0, 3min, 60min) == Seconds{3600});
  CHECK(buffer_time(1.0, 0.5, 3min, 60min) == Seconds{1890});
  CHECK(buffer_time(0.5, 0.8, 3min, 60min) == Seconds{180});
  CHECK(default_buffer(Asset::Bess).b_max == 60min);
  CHECK(default_buffer(Asset::Ev).b_max == 240min);
  CHECK(default_buffer(Asset::Ev).b_min == 3min);
}

TEST_CASE("enforced_charge_override") {
  const auto h1 = HouseConfig::reference(1);
  EvParams ev;
  const auto now = make_time(2024, 4, 10, 14);
  SimState s;
  s.time = now;
  s.bess_soc = 1.0;
  CHECK_FALSE(enforced_charge_override(s, 1.0, now + 1h, Asset::Bess, h1, ev));

  s.bess_soc = 0.0;
  const auto o = enforced_charge_override(s, 1.0, now + 1h, Asset::Bess, h1, ev);
  REQUIRE(o);
  CHECK(*o == doctest::Approx(-3.2));

  s.ev_soc = 0.9;
  CHECK_FALSE(enforced_charge_override(s, 0.95, now + 6h, Asset::Ev, h1, ev));
  s.ev_soc = 0.1;
  const auto e = enforced_charge_override(s, 0.95, now + 5h, Asset::Ev, h1, ev);
  REQUIRE(e);
  CHECK(*e == doctest::Approx(7.4));
}

TEST_CASE("enforced_min_charge blocks discharging a full battery right before the switch") {
  const auto h1 = HouseConfig::reference(1);
  EvParams ev;
  const auto sw = make_time(2024, 4, 10, 15);
  const auto late = enforced_min_charge(Asset::Bess, 1.0, -0.7, sw - 15min, 15min, 1.0, sw, h1, ev);
  REQUIRE(late);
  CHECK(*late == 0.0);
  CHECK_FALSE(enforced_min_charge(Asset::Bess, 1.0, -0.7, sw - 3h, 15min, 1.0, sw, h1, ev));
  CHECK_FALSE(enforced_min_charge(Asset::Bess, 1.0, 0.0, sw - 15min, 15min, 1.0, sw, h1, ev));
}

TEST_CASE("run_scenario: a load spike in the last step does not leave the BESS below its cap at the switch") {
  const auto start = make_time(2024, 4, 10, 15);
  auto data = testing_support::flat_data(start, 1);
  data.load_kw.values[95] = 2.5;
  RbcController rbc;
  const auto r = run_scenario(HouseConfig::reference(1), rbc, data, {start, start + 24h}, {}, 1.0);
  CHECK(r.steps.back().bess_soc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.steps.back().enforced_bess);
  CHECK(r.steps.back().grid_kw == doctest::Approx(-2.5));
}

TEST_CASE("available_caps with SOC-binary availability") {
  const auto h1 = HouseConfig::reference(1);
  EvParams ev;
  auto c = available_caps(h1, 0.0, 0.9, 1.0, ev, 0.0);
  CHECK(c.bess_discharge_kw == 0.0);
  CHECK(c.bess_charge_kw == doctest::Approx(3.2));
  CHECK(c.ev_kw == doctest::Approx(4.2));
  c = available_caps(h1, 1.0, 0.95, 0.95, ev, 0.0);
  CHECK(c.bess_charge_kw == 0.0);
  CHECK(c.ev_kw == 0.0);
}

TEST_CASE("run_scenario: zero load and PV with RBC only recharges the BESS before the switch") {
  const auto start = make_time(2024, 4, 10, 15);
  const auto data = testing_support::flat_data(start, 1);
  RbcController rbc;
  const auto r = run_scenario(HouseConfig::reference(1), rbc, data, {start, start + 24h}, {}, 0.5);
  REQUIRE(r.steps.size() == 96);
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    if (i < 88) CHECK(r.steps[i].grid_kw == 0.0);
    CHECK(r.steps[i].grid_kw <= 0.0);
  }
  CHECK(r.final_state.bess_soc == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("run_scenario: safety on and off agree for a controller that is always feasible") {
  const auto start = make_time(2024, 4, 10, 15);
  const auto data = testing_support::synthetic(1, start, 2, 7, false);
  ScenarioOptions on, off;
  off.safety = false;
  on.enforced_charging = off.enforced_charging = false;
  FixedController a{ActionPair{}}, b{ActionPair{}};
  const auto r1 = run_scenario(HouseConfig::reference(1), a, data, {start, start + 48h}, on);
  const auto r2 = run_scenario(HouseConfig::reference(1), b, data, {start, start + 48h}, off);
  REQUIRE(r1.steps.size() == r2.steps.size());
  for (std::size_t i = 0; i < r1.steps.size(); ++i) {
    CHECK(r1.steps[i].grid_kw == r2.steps[i].grid_kw);
    CHECK(r1.steps[i].bess_soc == r2.steps[i].bess_soc);
    CHECK_FALSE(r1.steps[i].safety_activated);
  }
}

TEST_CASE("run_scenario: RBC charges a connected EV at its CC-CV limit from arrival") {
  const auto start = make_time(2024, 4, 10, 15);
  auto data = testing_support::flat_data(start, 1, 0.5, 0.0);
  data.sessions.push_back(EvSession{start + 3h, start + 12h, 0.3, 0.9});
  RbcController rbc;
  const auto r = run_scenario(HouseConfig::reference(1), rbc, data, {start, start + 24h});
  EvParams ev;
  CHECK(r.steps[11].ev_kw == 0.0);
  CHECK(r.steps[12].ev_kw == doctest::Approx(7.4));
  double soc = 0.3;
  for (std::size_t i = 12; i < 48; ++i) {
    const double expect = std::min(ev_max_power(soc, ev), (0.9 - soc) * ev.capacity_kwh / (ev.charge_efficiency * 0.25));
    CHECK(r.steps[i].ev_kw == doctest::Approx(expect).epsilon(1e-9));
    soc = *r.steps[i].ev_soc;
  }
  REQUIRE(r.sessions.size() == 1);
  CHECK(r.sessions[0].reached_goal);
}

TEST_CASE("run_scenario invariants on random synthetic data") {
  const auto start = make_time(2024, 6, 3, 15);
  for (int house = 1; house <= 4; ++house) {
    const auto data = testing_support::synthetic(house, start, 3, 100 + static_cast<std::uint64_t>(house));
    for (bool safety : {true, false}) {
      ExplorationController stub(static_cast<std::uint64_t>(house));
      ScenarioOptions o;
      o.safety = safety;
      o.inner_dt = 300s;
      const auto cfg = HouseConfig::reference(house);
      const auto r = run_scenario(cfg, stub, data, {start, start + 72h}, o);
      for (const auto& s : r.steps) {
        CHECK(s.bess_soc >= 0.0);
        CHECK(s.bess_soc <= cfg.bess_soc_cap + 1e-12);
        if (s.ev_soc) CHECK((*s.ev_soc >= 0.0 && *s.ev_soc <= 1.0));
        CHECK(s.imported_kwh >= 0.0);
        CHECK(s.exported_kwh >= 0.0);
        CHECK(s.exported_kwh - s.imported_kwh == doctest::Approx(s.grid_kw * 0.25).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("run_scenario reports a data gap") {
  const auto start = make_time(2024, 4, 10, 15);
  const auto data = testing_support::flat_data(start, 1);
  RbcController rbc;
  try {
    (void)run_scenario(HouseConfig::reference(1), rbc, data, {start, start + 48h});
    FAIL("expected DataGapError");
  } catch (const DataGapError& e) {
    CHECK(e.from() >= start + 24h);
  }
}

TEST_CASE("time helpers") {
  const auto t = make_time(2024, 4, 10, 14, 30);
  CHECK(hour_of_day(t) == 14.5);
  CHECK(day_of_week(t) == 2);
  CHECK(next_switch(t, 15) == make_time(2024, 4, 10, 15));
  CHECK(next_switch(make_time(2024, 4, 10, 15), 15) == make_time(2024, 4, 11, 15));
  CHECK(previous_switch(t, 15) == make_time(2024, 4, 9, 15));
  CHECK(parse_iso("2024-04-10T14:30:00+02:00", 60) == make_time(2024, 4, 10, 13, 30));
  CHECK(parse_iso("2024-04-10 14:30", 60) == t);
  CHECK(format_iso(t) == "2024-04-10T14:30:00");
  CHECK(days_in_month(std::chrono::year{2024} / std::chrono::February) == 29);
  CHECK(days_in_year(std::chrono::year{2023}) == 365);
}
