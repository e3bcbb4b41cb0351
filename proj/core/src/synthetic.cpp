#include "hems/harness/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "hems/sim/physics.hpp"

namespace hems {

namespace {

constexpr Seconds kHour{3600};
constexpr Seconds kDay{86400};

double bump(double h, double centre, double width) {
  const double z = (h - centre) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

TimeSeries synthetic_prices(Timestamp from, int days, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> noise(0.0, 0.012);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  TimeSeries s{floor_to(from, kHour), kHour, {}};
  const int n = days * 24;
  s.values.reserve(static_cast<std::size_t>(n));
  double level = 0.10;
  double solar_dip = 0.05;
  for (int i = 0; i < n; ++i) {
    const Timestamp t = s.start + kHour * i;
    const double h = hour_of_day(t);
    if (i % 24 == 0 || i == 0) {
      level = 0.07 + 0.07 * unit(rng);
      solar_dip = 0.02 + 0.12 * unit(rng);  // sunny weekends push midday prices below zero
      if (day_of_week(t) >= 5) solar_dip += 0.03;
    }
    const double v = level + 0.06 * bump(h, 19.0, 2.0) + 0.03 * bump(h, 8.0, 1.5) - solar_dip * bump(h, 13.5, 2.5) +
                     noise(rng);
    s.values.push_back(std::round(v * 1e5) / 1e5);
  }
  return s;
}

ExogenousData synthetic_house_data(const HouseConfig& house, const EvParams& ev, const SyntheticOptions& options) {
  std::mt19937_64 rng(options.seed * 7919 + static_cast<std::uint64_t>(house.house_id));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const Timestamp from = floor_to(options.start, kEmsStep) - kDay;
  const int total_days = options.days + 2;
  const int steps = total_days * 96;

  ExogenousData d;
  d.load_kw = TimeSeries{from, kEmsStep, {}};
  d.pv_kw = TimeSeries{from, kEmsStep, {}};
  d.load_kw.values.reserve(static_cast<std::size_t>(steps));
  d.pv_kw.values.reserve(static_cast<std::size_t>(steps));
  if (options.reactive_kvar > 0.0) d.reactive_kvar = TimeSeries{from, kEmsStep, {}};

  double cloud = 1.0;
  for (int i = 0; i < steps; ++i) {
    const Timestamp t = from + kEmsStep * i;
    const double h = hour_of_day(t);
    if (i % 96 == 0) cloud = 0.25 + 0.75 * unit(rng);
    double load = 0.25 + 0.6 * bump(h, 7.5, 1.0) + 1.2 * bump(h, 19.0, 1.8) + 0.15 * noise(rng);
    if (unit(rng) < 0.04) load += 1.0 + 2.0 * unit(rng);  // appliance cycle
    load = std::clamp(load * options.load_scale, 0.05, 6.0);
    d.load_kw.values.push_back(std::round(load * 1e4) / 1e4);

    double pv = 0.0;
    if (h > 6.0 && h < 20.0) {
      const double shape = std::sin(std::numbers::pi * (h - 6.0) / 14.0);
      pv = house.pv_peak_kw * 0.85 * shape * shape * cloud * (1.0 + 0.08 * noise(rng));
    }
    d.pv_kw.values.push_back(std::round(std::max(0.0, pv) * 1e4) / 1e4);
    if (options.reactive_kvar > 0.0)
      d.reactive_kvar.values.push_back(std::max(0.0, options.reactive_kvar * (1.0 + 0.3 * noise(rng))));
  }

  d.price = synthetic_prices(from, total_days, options.seed);

  if (options.ev_sessions) {
    const auto lim = default_buffer(Asset::Ev);
    const Timestamp first_midnight = floor_to(from, kDay);
    for (int day = 1; day + 1 < total_days; ++day) {
      const Timestamp midnight = first_midnight + kDay * day;
      const double u = unit(rng);
      if (u > 0.75) continue;
      EvSession s;
      const bool daytime = day_of_week(midnight) >= 5 && u < 0.2;
      if (daytime) {
        // Weekend visit that ends before the switch.
        s.arrival = midnight + kHour * 9 + kEmsStep * static_cast<int>(unit(rng) * 4);
        s.departure = midnight + Seconds{options.switch_hour * 3600} - kEmsStep * (1 + static_cast<int>(unit(rng) * 3));
      } else {
        s.arrival = midnight + kHour * 17 + kEmsStep * static_cast<int>(unit(rng) * 12);
        s.departure = midnight + kDay + kHour * 6 + kEmsStep * static_cast<int>(unit(rng) * 10);
      }
      s.soc_start = std::round((0.15 + 0.45 * unit(rng)) * 1000.0) / 1000.0;
      const double hours = to_hours(s.departure - s.arrival);
      // Keep the goal reachable ahead of the largest buffer.
      const double reachable = s.soc_start + 0.9 * std::max(0.0, hours - to_hours(lim.b_max)) * ev.p_max_kw *
                                                 ev.charge_efficiency / ev.capacity_kwh;
      double goal = s.soc_start + 0.2 + 0.4 * unit(rng);
      goal = std::min({goal, 0.95, reachable});
      s.soc_goal = std::round(std::max(goal, s.soc_start) * 1000.0) / 1000.0;
      if (s.soc_goal < s.soc_start) s.soc_goal = s.soc_start;
      d.sessions.push_back(s);
    }
  }
  return d;
}

}  // namespace hems
