#pragma once

#include <optional>

#include "hems/sim/types.hpp"

namespace hems {

// CC-CV charging limit: flat up to soc_cc_cv, then linear down to p_min_at_full at 100%.
double ev_max_power(double soc, const EvParams& ev);

// One EV charging step; p must respect the CC-CV limit at `soc`.
double ev_soc_step(double soc, double p_kw, double dt_hours, const EvParams& ev);

struct BessStepResult {
  double soc = 0.0;
  double realized_kw = 0.0;  // signed, discharge positive
  bool clipped = false;      // setpoint outside asset limits or truncated by SOC
};

// Signed setpoint (charge negative). Setpoints beyond the rated limits are clipped;
// the realized power is truncated so the SOC stays within [0, cfg.bess_soc_cap].
BessStepResult bess_step(double soc, double setpoint_kw, double dt_hours, const HouseConfig& cfg);

// Grid exchange, positive = injection.
inline double grid_power(double load_kw, double ev_kw, double pv_kw, double bess_kw) {
  return -load_kw - ev_kw + pv_kw + bess_kw;
}

// Buffer kept before a charging deadline, growing with the SOC deficit.
Seconds buffer_time(double soc_goal, double soc, Seconds b_min, Seconds b_max);

struct BufferLimits {
  Seconds b_min{180};
  Seconds b_max{3600};
};
BufferLimits default_buffer(Asset asset);

// Hours needed to charge from `soc` to `goal` at the asset's maximum power,
// following the CC-CV taper for the EV.
double hours_to_charge(Asset asset, double soc, double goal, const HouseConfig& cfg,
                       const EvParams& ev);

// Maximum-power override when charging at full power starting now would not reach
// `soc_goal` by (target_time - buffer). Returns the signed setpoint (BESS: negative).
std::optional<double> enforced_charge_override(const SimState& state, double soc_goal,
                                               Timestamp target_time, Asset asset,
                                               const HouseConfig& cfg, const EvParams& ev);

// Step-level variant: if following `proposed_charge_kw` (positive = charging,
// negative = BESS discharge) for `dt` leaves the goal unreachable by the
// buffer-adjusted deadline, returns the smallest charging power that keeps it reachable
// (or full power when none does).
std::optional<double> enforced_min_charge(Asset asset, double soc, double proposed_charge_kw,
                                          Timestamp now, Seconds dt, double soc_goal,
                                          Timestamp target_time, const HouseConfig& cfg,
                                          const EvParams& ev);

// Power available over a step of `dt_hours` (0 = instantaneous, SOC-binary availability).
struct AssetCaps {
  double bess_charge_kw = 0.0;     // magnitude
  double bess_discharge_kw = 0.0;
  double ev_kw = 0.0;
};
AssetCaps available_caps(const HouseConfig& cfg, double bess_soc, std::optional<double> ev_soc,
                         std::optional<double> ev_soc_goal, const EvParams& ev, double dt_hours);

// Self-consumption: BESS tracks net household demand towards zero grid exchange.
double self_consumption_setpoint(double load_kw, double pv_kw, double ev_kw, const AssetCaps& caps);

}  // namespace hems
