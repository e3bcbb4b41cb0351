#pragma once

#include <cstdint>

#include "hems/sim/simulator.hpp"

namespace hems {

struct SyntheticOptions {
  Timestamp start{};      // first simulated instant; data starts one day earlier
  int days = 7;
  std::uint64_t seed = 0;
  bool ev_sessions = true;
  double load_scale = 1.0;
  double reactive_kvar = 0.0;  // mean reactive load; 0 leaves the series empty
  int switch_hour = 15;
};

// Deterministic household load, PV, hourly day-ahead prices and EV sessions.
// Sessions never span the switch hour and are always reachable with the default
// enforced-charging buffers.
ExogenousData synthetic_house_data(const HouseConfig& house, const EvParams& ev, const SyntheticOptions& options);

TimeSeries synthetic_prices(Timestamp from, int days, std::uint64_t seed);

}  // namespace hems
