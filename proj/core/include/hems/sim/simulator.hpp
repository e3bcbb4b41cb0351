#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hems/safety/safety_layer.hpp"
#include "hems/series.hpp"
#include "hems/sim/types.hpp"

namespace hems {

// Exogenous inputs of one house. Load and PV in kW, prices in EUR/kWh.
struct ExogenousData {
  TimeSeries load_kw;
  TimeSeries pv_kw;
  TimeSeries price;
  TimeSeries reactive_kvar;  // may be empty (treated as 0)
  std::vector<EvSession> sessions;  // time-ordered, non-overlapping

  double reactive_at(Timestamp t) const;
};

struct TimeWindow {
  Timestamp from{};
  Timestamp to{};
};

// What an EMS sees at the start of a 15-minute step.
struct Observation {
  Timestamp time{};
  double load_kw = 0.0;
  double pv_kw = 0.0;
  double bess_soc = 0.0;
  std::optional<double> ev_soc;
  double price = 0.0;
  double hour = 0.0;
  int day_of_week = 0;
  double shifted_price = 0.0;  // price minus the lowest price of the current experiment day
  Seconds time_to_switch{0};
  std::optional<EvSession> session;
};

// Lowest day-ahead price over the experiment day [switch, next switch) containing t.
double day_min_price(const TimeSeries& price, Timestamp t, int switch_hour);

struct DecisionContext {
  const HouseConfig& house;
  const EvParams& ev;
  const ExogenousData& data;
  TimeWindow window;
  int switch_hour = 15;
};

class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string name() const = 0;
  virtual ActionPair decide(const Observation& obs, const DecisionContext& ctx) = 0;
  // Realized outcome of the last decision.
  virtual void observe(const StepTrace& /*trace*/) {}
  // True when the last decision came from a backup policy.
  virtual bool degraded() const { return false; }
};

struct ScenarioOptions {
  bool safety = true;
  GridLimitMode mode = GridLimitMode::ActivePower;
  double fallback_threshold = kDefaultFallbackThreshold;
  Seconds inner_dt = kEmsStep;
  bool enforced_charging = true;
  int switch_hour = 15;
  EvParams ev;
};

struct SessionOutcome {
  EvSession session;
  double final_soc = 0.0;
  bool reached_goal = false;
  bool truncated = false;  // window ended before departure
};

struct ScenarioResult {
  std::vector<StepTrace> steps;
  std::vector<SessionOutcome> sessions;
  SimState final_state;
  int safety_activations = 0;  // steps with at least one correction
  int fallback_uses = 0;
  int degraded_steps = 0;
  double exceedance_wh = 0.0;
};

// Simulates `window` (aligned to 15 minutes) with one controller decision per step and
// `inner_dt` integration sub-steps. Throws DataGapError when the data does not cover it.
ScenarioResult run_scenario(const HouseConfig& house, Controller& controller, const ExogenousData& data,
                            TimeWindow window, const ScenarioOptions& options = {},
                            std::optional<double> initial_bess_soc = std::nullopt);

}  // namespace hems
