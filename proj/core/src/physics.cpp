#include "hems/sim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hems {

namespace {

constexpr double kSocTol = 1e-12;

double buffer_hours(double soc_goal, double soc, Seconds b_min, Seconds b_max) {
  const double lo = to_hours(b_min);
  const double hi = to_hours(b_max);
  if (soc >= soc_goal) return lo;
  return (soc_goal - soc) * (hi - lo) + lo;
}

double max_charge_kw(Asset asset, double soc, const HouseConfig& cfg, const EvParams& ev) {
  return asset == Asset::Bess ? cfg.bess_max_charge_kw : ev_max_power(std::clamp(soc, 0.0, 1.0), ev);
}

// SOC after charging at `charge_kw` (negative = BESS discharge) for dt_hours.
double soc_after(Asset asset, double soc, double charge_kw, double dt_hours, const HouseConfig& cfg,
                 const EvParams& ev) {
  if (asset == Asset::Ev) {
    return std::min(1.0, soc + ev.charge_efficiency * std::max(charge_kw, 0.0) * dt_hours / ev.capacity_kwh);
  }
  if (charge_kw >= 0.0) {
    return std::min(std::max(cfg.bess_soc_cap, soc),
                    soc + cfg.bess_efficiency * charge_kw * dt_hours / cfg.bess_capacity_kwh);
  }
  return std::max(0.0, soc + charge_kw / cfg.bess_efficiency * dt_hours / cfg.bess_capacity_kwh);
}

}  // namespace

double ev_max_power(double soc, const EvParams& ev) {
  if (!(soc >= 0.0 && soc <= 1.0)) throw DomainError("ev_max_power: SOC outside [0,1]");
  if (soc <= ev.soc_cc_cv) return ev.p_max_kw;
  return ev.p_max_kw - (ev.p_max_kw - ev.p_min_at_full_kw) * (soc - ev.soc_cc_cv) / (1.0 - ev.soc_cc_cv);
}

double ev_soc_step(double soc, double p_kw, double dt_hours, const EvParams& ev) {
  if (p_kw < 0.0) throw DomainError("ev_soc_step: negative charging power");
  if (p_kw > ev_max_power(soc, ev) + 1e-9) throw DomainError("ev_soc_step: power above CC-CV limit");
  return std::clamp(soc + ev.charge_efficiency * p_kw * dt_hours / ev.capacity_kwh, 0.0, 1.0);
}

BessStepResult bess_step(double soc, double setpoint_kw, double dt_hours, const HouseConfig& cfg) {
  if (!(dt_hours > 0.0)) throw DomainError("bess_step: dt must be positive");
  BessStepResult r;
  double p = std::clamp(setpoint_kw, -cfg.bess_max_charge_kw, cfg.bess_max_discharge_kw);
  r.clipped = p != setpoint_kw;
  const double e = cfg.bess_capacity_kwh;
  const double eta = cfg.bess_efficiency;
  if (p < 0.0) {
    double charge = -p;
    const double room = std::max(0.0, cfg.bess_soc_cap - soc);
    const double limit = room * e / (eta * dt_hours);
    if (charge > limit) {
      charge = limit;
      r.clipped = true;
    }
    r.realized_kw = -charge;
    r.soc = charge == limit ? std::max(soc, cfg.bess_soc_cap) : soc + charge * eta * dt_hours / e;
  } else if (p > 0.0) {
    double discharge = p;
    const double limit = std::max(0.0, soc) * e * eta / dt_hours;
    if (discharge > limit) {
      discharge = limit;
      r.clipped = true;
    }
    r.realized_kw = discharge;
    r.soc = discharge == limit ? 0.0 : soc - discharge / eta * dt_hours / e;
  } else {
    r.soc = soc;
  }
  r.soc = std::clamp(r.soc, 0.0, 1.0);
  return r;
}

Seconds buffer_time(double soc_goal, double soc, Seconds b_min, Seconds b_max) {
  const double h = buffer_hours(soc_goal, soc, b_min, b_max);
  return Seconds{static_cast<long>(std::llround(h * 3600.0))};
}

BufferLimits default_buffer(Asset asset) {
  return asset == Asset::Bess ? BufferLimits{Seconds{180}, Seconds{3600}}
                              : BufferLimits{Seconds{180}, Seconds{4 * 3600}};
}

double hours_to_charge(Asset asset, double soc, double goal, const HouseConfig& cfg,
                       const EvParams& ev) {
  if (soc >= goal - kSocTol) return 0.0;
  if (asset == Asset::Bess) {
    return (goal - soc) * cfg.bess_capacity_kwh / (cfg.bess_efficiency * cfg.bess_max_charge_kw);
  }
  const double scale = ev.capacity_kwh / ev.charge_efficiency;
  double hours = 0.0;
  double s = soc;
  if (s < ev.soc_cc_cv) {
    const double s1 = std::min(goal, ev.soc_cc_cv);
    hours += (s1 - s) * scale / ev.p_max_kw;
    s = s1;
  }
  if (goal > s) {
    const double slope = (ev.p_max_kw - ev.p_min_at_full_kw) / (1.0 - ev.soc_cc_cv);
    if (slope <= 0.0) {
      hours += (goal - s) * scale / ev.p_max_kw;
    } else {
      const double p_from = ev_max_power(s, ev);
      const double p_to = ev_max_power(std::min(goal, 1.0), ev);
      if (p_to <= 0.0) return std::numeric_limits<double>::infinity();
      hours += scale / slope * std::log(p_from / p_to);
    }
  }
  return hours;
}

std::optional<double> enforced_charge_override(const SimState& state, double soc_goal,
                                               Timestamp target_time, Asset asset,
                                               const HouseConfig& cfg, const EvParams& ev) {
  if (target_time <= state.time) throw DomainError("enforced_charge_override: target not in the future");
  double soc = state.bess_soc;
  if (asset == Asset::Ev) {
    if (!state.ev_soc) return std::nullopt;
    soc = *state.ev_soc;
  }
  if (soc >= soc_goal - kSocTol) return std::nullopt;
  const auto limits = default_buffer(asset);
  const double available =
      to_hours(target_time - state.time) - buffer_hours(soc_goal, soc, limits.b_min, limits.b_max);
  if (hours_to_charge(asset, soc, soc_goal, cfg, ev) <= available) return std::nullopt;
  return asset == Asset::Bess ? -cfg.bess_max_charge_kw : ev_max_power(soc, ev);
}

std::optional<double> enforced_min_charge(Asset asset, double soc, double proposed_charge_kw,
                                          Timestamp now, Seconds dt, double soc_goal,
                                          Timestamp target_time, const HouseConfig& cfg,
                                          const EvParams& ev) {
  if (soc >= soc_goal - kSocTol && proposed_charge_kw >= 0.0) return std::nullopt;
  const auto limits = default_buffer(asset);
  const double dt_h = to_hours(dt);
  const double available = std::max(
      0.0, to_hours(target_time - now) - buffer_hours(soc_goal, soc, limits.b_min, limits.b_max) - dt_h);
  const auto reachable = [&](double charge_kw) {
    const double next = soc_after(asset, soc, charge_kw, dt_h, cfg, ev);
    return hours_to_charge(asset, next, soc_goal, cfg, ev) <= available + 1e-12;
  };
  if (reachable(proposed_charge_kw)) return std::nullopt;
  const double full = max_charge_kw(asset, soc, cfg, ev);
  if (!reachable(full)) return full;
  double lo = std::max(proposed_charge_kw, 0.0);
  if (reachable(lo)) return lo;
  double hi = full;
  for (int i = 0; i < 64 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (reachable(mid) ? hi : lo) = mid;
  }
  return hi;
}

AssetCaps available_caps(const HouseConfig& cfg, double bess_soc, std::optional<double> ev_soc,
                         std::optional<double> ev_soc_goal, const EvParams& ev, double dt_hours) {
  AssetCaps caps;
  const double cap = cfg.bess_soc_cap;
  if (dt_hours > 0.0) {
    caps.bess_charge_kw = std::min(cfg.bess_max_charge_kw, std::max(0.0, cap - bess_soc) *
                                                               cfg.bess_capacity_kwh /
                                                               (cfg.bess_efficiency * dt_hours));
    caps.bess_discharge_kw = std::min(
        cfg.bess_max_discharge_kw,
        std::max(0.0, bess_soc) * cfg.bess_capacity_kwh * cfg.bess_efficiency / dt_hours);
  } else {
    caps.bess_charge_kw = bess_soc < cap ? cfg.bess_max_charge_kw : 0.0;
    caps.bess_discharge_kw = bess_soc > 0.0 ? cfg.bess_max_discharge_kw : 0.0;
  }
  if (ev_soc) {
    const double s = std::clamp(*ev_soc, 0.0, 1.0);
    caps.ev_kw = ev_max_power(s, ev);
    if (ev_soc_goal) {
      if (s >= *ev_soc_goal) {
        caps.ev_kw = 0.0;
      } else if (dt_hours > 0.0) {
        caps.ev_kw = std::min(caps.ev_kw, (*ev_soc_goal - s) * ev.capacity_kwh /
                                              (ev.charge_efficiency * dt_hours));
      }
    }
  }
  return caps;
}

double self_consumption_setpoint(double load_kw, double pv_kw, double ev_kw, const AssetCaps& caps) {
  return std::clamp(load_kw + ev_kw - pv_kw, -caps.bess_charge_kw, caps.bess_discharge_kw);
}

}  // namespace hems
