#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "hems/time.hpp"

namespace hems {

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct HouseConfig {
  int house_id = 1;
  double bess_capacity_kwh = 5.12;
  double bess_max_charge_kw = 3.2;
  double bess_max_discharge_kw = 3.2;
  double bess_efficiency = 0.95;
  double pv_peak_kw = 3.4;
  double grid_limit_active_kw = 9.2;
  double grid_limit_apparent_kva = 9.2;
  // Active-power grid limit used inside the MPC model.
  double mpc_grid_limit_kw = 8.7;
  // Charging stops at this SOC and the BESS falls back to self-consumption above it.
  double bess_soc_cap = 1.0;

  void validate() const;

  // Asset data of the four test houses (1..4).
  static HouseConfig reference(int house_id);
};

struct EvParams {
  double capacity_kwh = 60.0;
  double p_max_kw = 7.4;
  double p_min_at_full_kw = 1.0;
  double soc_cc_cv = 0.8;
  double charge_efficiency = 0.95;

  void validate() const;
};

struct EvSession {
  Timestamp arrival{};
  Timestamp departure{};
  double soc_start = 0.0;
  double soc_goal = 1.0;

  void validate() const;
  bool operator==(const EvSession&) const = default;
};

struct SimState {
  Timestamp time{};
  double bess_soc = 1.0;
  std::optional<double> ev_soc;
  std::optional<EvSession> active_session;
};

// BESS command: either self-consumption mode or a signed power setpoint
// (charge negative, discharge positive, kW).
class BessCommand {
 public:
  static BessCommand self_consumption() { return BessCommand{}; }
  static BessCommand power(double kw) { return BessCommand{kw}; }

  bool is_self_consumption() const { return !kw_.has_value(); }
  double kw() const {
    if (!kw_) throw std::logic_error("BessCommand: self-consumption has no setpoint");
    return *kw_;
  }
  bool operator==(const BessCommand&) const = default;

 private:
  BessCommand() = default;
  explicit BessCommand(double kw) : kw_(kw) {}
  std::optional<double> kw_;
};

struct ActionPair {
  BessCommand bess = BessCommand::self_consumption();
  double ev_kw = 0.0;
};

struct StepTrace {
  Timestamp time{};
  // Mean realized powers over the step, kW. bess: discharge positive.
  double load_kw = 0.0;
  double pv_kw = 0.0;
  double ev_kw = 0.0;
  double bess_kw = 0.0;
  double grid_kw = 0.0;  // positive = injection
  double imported_kwh = 0.0;
  double exported_kwh = 0.0;
  bool safety_activated = false;
  bool fallback_used = false;
  bool setpoint_clipped = false;
  bool enforced_bess = false;
  bool enforced_ev = false;
  double correction_kw = 0.0;       // largest correction applied by the safety layer
  double exceedance_kw = 0.0;       // largest excess above the grid limit
  double exceedance_kwh = 0.0;      // energy above the grid limit
  double bess_soc = 0.0;            // at step end
  std::optional<double> ev_soc;     // at step end, when connected
  bool controller_degraded = false;
};

enum class Asset { Bess, Ev };

}  // namespace hems
