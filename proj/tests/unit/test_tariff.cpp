#include <doctest.h>

#include <algorithm>
#include <random>

#include "hems/tariff/tariff.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hems;
using namespace std::chrono_literals;

TEST_CASE("spot_prices") {
  auto p = spot_prices(0.10);
  CHECK(p.offtake == doctest::Approx(0.11766).epsilon(1e-12));
  CHECK(p.injection == doctest::Approx(0.091).epsilon(1e-12));
  p = spot_prices(-0.05);
  CHECK(p.offtake == doctest::Approx(-0.039).epsilon(1e-12));
  CHECK(p.injection == doctest::Approx(-0.059).epsilon(1e-12));
  CHECK(spot_prices(0.009).injection == 0.0);
}

TEST_CASE("peak_cost") {
  std::vector<double> e(2880, 0.3);
  e[17] = 1.2;
  CHECK(peak_cost(e, 1.0) == doctest::Approx(16.8));
  std::fill(e.begin(), e.end(), 0.0);
  CHECK(peak_cost(e, 1.0) == doctest::Approx(8.75));
  CHECK(peak_cost(e, 0.5) == doctest::Approx(4.375));
  CHECK(peak_cost({}, 0.5) == doctest::Approx(4.375));
}

TEST_CASE("peak_cost is invariant to permutations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> e(500);
  for (auto& x : e) x = u(rng);
  const double c = peak_cost(e, 0.3);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(e.begin(), e.end(), rng);
    CHECK(peak_cost(e, 0.3) == c);
  }
}

TEST_CASE("total_cost single-step and floor examples") {
  const auto t0 = make_time(2024, 4, 10);
  const auto price = testing_support::constant(t0, 24, 0.10, 1h);
  std::vector<MeteredStep> one{{t0, 1.0, 0.0}};
  auto c = total_cost(one, price);
  CHECK(c.day_ahead == doctest::Approx(0.11766).epsilon(1e-12));
  CHECK(c.offtake_extras == doctest::Approx(0.114).epsilon(1e-12));

  std::vector<MeteredStep> zero;
  for (int i = 0; i < 96; ++i) zero.push_back({t0 + 15min * i, 0.0, 0.0});
  c = total_cost(zero, price);
  CHECK(c.day_ahead == 0.0);
  CHECK(c.offtake_extras == 0.0);
  CHECK(c.peak == doctest::Approx(8.75 / 30).epsilon(1e-12));
  CHECK(c.yearly == doctest::Approx(115.84 / 366).epsilon(1e-12));
  CHECK(c.total == c.day_ahead + c.offtake_extras + c.peak + c.yearly);

  std::vector<MeteredStep> both{{t0, 0.7, 0.7}};
  c = total_cost(both, price);
  CHECK(c.day_ahead == doctest::Approx(0.7 * (0.11766 - 0.091)).epsilon(1e-12));
  CHECK(c.day_ahead > 0.0);
  CHECK(c.offtake_extras > 0.0);
}

TEST_CASE("total_cost splits the peak by calendar month") {
  const auto t0 = make_time(2024, 4, 30, 12);
  const auto price = testing_support::constant(t0, 48, 0.10, 1h);
  std::vector<MeteredStep> steps;
  for (int i = 0; i < 96; ++i) steps.push_back({t0 + 15min * i, i == 3 ? 1.5 : 0.0, 0.0});
  const auto c = total_cost(steps, price);
  // 48 April steps with a 6 kW peak, 48 May steps at the floor.
  const double expect = 48.0 / (96 * 30) * 3.5 * 6.0 + 48.0 / (96 * 31) * 3.5 * 2.5;
  CHECK(c.peak == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("total_cost needs a price for every step") {
  const auto t0 = make_time(2024, 4, 10);
  const auto price = testing_support::constant(t0, 1, 0.10, 1h);
  std::vector<MeteredStep> steps{{t0 + 1h, 1.0, 0.0}};
  CHECK_THROWS_AS(total_cost(steps, price), DataGapError);
}

TEST_CASE("net_consumption_cost") {
  const auto t0 = make_time(2024, 4, 10);
  const auto price = testing_support::constant(t0, 24, 0.10, 1h);
  std::vector<MeteredStep> both{{t0, 1.0, 1.0}, {t0 + 15min, 1.0, 1.0}};
  auto n = net_consumption_cost(both, price);
  CHECK(n.day_ahead == 0.0);
  CHECK(n.offtake_extras == 0.0);

  std::vector<MeteredStep> imp{{t0, 1.0, 0.0}};
  const auto a = total_cost(imp, price);
  n = net_consumption_cost(imp, price);
  CHECK(n.day_ahead == a.day_ahead);
  CHECK(n.offtake_extras == a.offtake_extras);
  CHECK(n.peak == a.peak);
  CHECK(n.total == a.total);
}

TEST_CASE("cost is linear in energy with fixed prices and peak step") {
  const auto t0 = make_time(2024, 4, 10);
  const auto price = testing_support::series(t0, {0.1, -0.02, 0.3, 0.05}, 1h);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  std::vector<MeteredStep> a, b, sum;
  for (int i = 0; i < 16; ++i) {
    const auto t = t0 + 15min * i;
    a.push_back({t, u(rng), u(rng)});
    b.push_back({t, u(rng), u(rng)});
    sum.push_back({t, a.back().imported_kwh + b.back().imported_kwh, a.back().exported_kwh + b.back().exported_kwh});
  }
  const auto ca = total_cost(a, price), cb = total_cost(b, price), cs = total_cost(sum, price);
  CHECK(cs.day_ahead == doctest::Approx(ca.day_ahead + cb.day_ahead).epsilon(1e-12));
  CHECK(cs.offtake_extras == doctest::Approx(ca.offtake_extras + cb.offtake_extras).epsilon(1e-12));
}

TEST_CASE("tariff oracle on random traces") {
  const auto t0 = make_time(2024, 2, 27);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pu(-0.1, 0.4), eu(0.0, 1.0);
  const int hours = 24 * 5;
  std::vector<double> vd(hours);
  for (auto& v : vd) v = pu(rng);
  const auto price = testing_support::series(t0, vd, 1h);
  const oracle::Tariff t;
  std::vector<MeteredStep> steps;
  double da = 0, ex = 0;
  double peak_feb = 0, peak_mar = 0;
  int n_feb = 0, n_mar = 0;
  for (int i = 0; i < hours * 4; ++i) {
    const double eo = eu(rng) < 0.5 ? eu(rng) : 0.0, ei = eo == 0.0 ? eu(rng) : 0.0;
    steps.push_back({t0 + 15min * i, eo, ei});
    const double v = vd[static_cast<std::size_t>(i / 4)];
    da += eo * oracle::offtake_price(v, t) - ei * oracle::injection_price(v, t);
    ex += eo * t.extras;
    if (i < 3 * 96) {
      peak_feb = std::max(peak_feb, 4 * eo);
      ++n_feb;
    } else {
      peak_mar = std::max(peak_mar, 4 * eo);
      ++n_mar;
    }
  }
  const double pk = n_feb / (96.0 * 29) * t.peak_price * std::max(peak_feb, t.floor_kw) +
                    n_mar / (96.0 * 31) * t.peak_price * std::max(peak_mar, t.floor_kw);
  const double yr = steps.size() / (96.0 * 366) * t.yearly;
  const auto c = total_cost(steps, price);
  CHECK(c.day_ahead == doctest::Approx(da).epsilon(1e-10));
  CHECK(c.offtake_extras == doctest::Approx(ex).epsilon(1e-10));
  CHECK(c.peak == doctest::Approx(pk).epsilon(1e-10));
  CHECK(c.yearly == doctest::Approx(yr).epsilon(1e-10));
}

TEST_CASE("TariffParams validation") {
  TariffParams p;
  CHECK_NOTHROW(p.validate());
  p.vat = 0.9;
  CHECK_THROWS(p.validate());
  p = {};
  p.peak_floor_kw = 0.0;
  CHECK_THROWS(p.validate());
}
