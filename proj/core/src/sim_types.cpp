#include <cmath>
#include <string>

#include "hems/sim/types.hpp"

namespace hems {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

void HouseConfig::validate() const {
  require(house_id >= 1 && house_id <= 4, "house_id must be in 1..4");
  require(finite_positive(bess_capacity_kwh), "BESS capacity must be positive");
  require(finite_positive(bess_max_charge_kw), "BESS max charge must be positive");
  require(finite_positive(bess_max_discharge_kw), "BESS max discharge must be positive");
  require(bess_efficiency > 0.0 && bess_efficiency <= 1.0, "BESS efficiency must be in (0,1]");
  require(std::isfinite(pv_peak_kw) && pv_peak_kw >= 0.0, "PV peak must be non-negative");
  require(finite_positive(grid_limit_active_kw), "active grid limit must be positive");
  require(finite_positive(grid_limit_apparent_kva), "apparent grid limit must be positive");
  require(finite_positive(mpc_grid_limit_kw), "MPC grid limit must be positive");
  require(bess_soc_cap > 0.0 && bess_soc_cap <= 1.0, "BESS SOC cap must be in (0,1]");
}

HouseConfig HouseConfig::reference(int house_id) {
  HouseConfig h;
  h.house_id = house_id;
  switch (house_id) {
    case 1:
      h.bess_capacity_kwh = 5.12;
      h.bess_max_charge_kw = 3.2;
      h.bess_max_discharge_kw = 3.2;
      h.bess_efficiency = 0.95;
      h.pv_peak_kw = 3.4;
      break;
    case 2:
      h.bess_capacity_kwh = 5.0;
      h.bess_max_charge_kw = 2.5;
      h.bess_max_discharge_kw = 2.5;
      h.bess_efficiency = 0.95;
      h.pv_peak_kw = 5.6;
      h.grid_limit_active_kw = 17.2;
      h.grid_limit_apparent_kva = 17.2;
      h.mpc_grid_limit_kw = 17.2 * 8.7 / 9.2;
      break;
    case 3:
      h.bess_capacity_kwh = 15.3;
      h.bess_max_charge_kw = 3.0;
      h.bess_max_discharge_kw = 4.0;
      h.bess_efficiency = 0.96;
      h.pv_peak_kw = 3.0;
      break;
    case 4:
      h.bess_capacity_kwh = 3.55;
      h.bess_max_charge_kw = 1.7;
      h.bess_max_discharge_kw = 2.5;
      h.bess_efficiency = 0.95;
      h.pv_peak_kw = 2.6;
      h.bess_soc_cap = 0.95;
      break;
    default:
      throw DomainError("reference houses are numbered 1..4");
  }
  return h;
}

void EvParams::validate() const {
  require(finite_positive(capacity_kwh), "EV capacity must be positive");
  require(finite_positive(p_max_kw), "EV max power must be positive");
  require(std::isfinite(p_min_at_full_kw) && p_min_at_full_kw >= 0.0 &&
              p_min_at_full_kw <= p_max_kw,
          "EV power at full SOC must be in [0, p_max]");
  require(soc_cc_cv > 0.0 && soc_cc_cv < 1.0, "soc_cc_cv must be in (0,1)");
  require(charge_efficiency > 0.0 && charge_efficiency <= 1.0,
          "EV charge efficiency must be in (0,1]");
}

void EvSession::validate() const {
  require(arrival < departure, "session arrival must precede departure (" + format_iso(arrival) + ")");
  require(soc_start >= 0.0 && soc_start <= 1.0, "session soc_start must be in [0,1]");
  require(soc_goal >= 0.0 && soc_goal <= 1.0, "session soc_goal must be in [0,1]");
  require(soc_start <= soc_goal, "session soc_goal below soc_start (" + format_iso(arrival) + ")");
}

}  // namespace hems
