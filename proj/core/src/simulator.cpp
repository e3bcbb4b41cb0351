#include "hems/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hems/sim/physics.hpp"

namespace hems {

namespace {

constexpr double kExceedanceTolKw = 1e-6;
constexpr double kGoalTol = 1e-6;
constexpr Seconds kEnforcedCommit{60};

Timestamp ceil_to(Timestamp t, Seconds step) {
  const Timestamp f = floor_to(t, step);
  return f == t ? t : f + step;
}

void require_coverage(const TimeSeries& s, const char* what, Timestamp from, Timestamp to) {
  if (s.empty()) throw DataGapError(std::string("no ") + what + " data", from, to);
  if (s.start > from) throw DataGapError(std::string("missing ") + what + " data", from, std::min(s.start, to));
  if (s.end() < to) throw DataGapError(std::string("missing ") + what + " data", std::max(s.end(), from), to);
}

struct PlannedSession {
  EvSession session;
  Timestamp start;  // first inner step that may charge
  Timestamp end;    // charging must finish by here
};

class SessionTracker {
 public:
  SessionTracker(const std::vector<EvSession>& sessions, TimeWindow window, Seconds dt) : dt_(dt) {
    for (const auto& s : sessions) {
      if (s.departure <= window.from || s.arrival >= window.to) continue;
      PlannedSession p{s, ceil_to(std::max(s.arrival, window.from), dt), floor_to(s.departure, dt)};
      if (p.end <= p.start) continue;
      planned_.push_back(p);
    }
  }

  // Advances to inner step starting at t, closing and opening sessions as needed.
  void update(Timestamp t, SimState& state, std::vector<SessionOutcome>& outcomes) {
    if (current_ && t + dt_ > current_->end) close(state, outcomes, false);
    if (current_) return;
    while (next_ < planned_.size() && planned_[next_].end < t + dt_) ++next_;
    if (next_ < planned_.size() && planned_[next_].start <= t) {
      current_ = planned_[next_++];
      state.active_session = current_->session;
      state.ev_soc = current_->session.soc_start;
    }
  }

  void close(SimState& state, std::vector<SessionOutcome>& outcomes, bool truncated) {
    if (!current_) return;
    const double soc = state.ev_soc.value_or(current_->session.soc_start);
    outcomes.push_back(SessionOutcome{current_->session, soc, soc >= current_->session.soc_goal - kGoalTol, truncated});
    current_.reset();
    state.active_session.reset();
    state.ev_soc.reset();
  }

  const std::optional<PlannedSession>& current() const { return current_; }

 private:
  Seconds dt_;
  std::vector<PlannedSession> planned_;
  std::size_t next_ = 0;
  std::optional<PlannedSession> current_;
};

double grid_excess_kw(double grid_kw, double reactive_kvar, const HouseConfig& house, GridLimitMode mode) {
  if (mode == GridLimitMode::ActivePower) return std::abs(grid_kw) - house.grid_limit_active_kw;
  return std::hypot(grid_kw, reactive_kvar) - house.grid_limit_apparent_kva;
}

}  // namespace

double ExogenousData::reactive_at(Timestamp t) const {
  if (reactive_kvar.empty()) return 0.0;
  return reactive_kvar.at(t);
}

double day_min_price(const TimeSeries& price, Timestamp t, int switch_hour) {
  const Timestamp from = previous_switch(t, switch_hour);
  const Timestamp to = next_switch(t, switch_hour);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < price.size(); ++i) {
    const Timestamp a = price.time_at(i);
    if (a + price.step <= from || a >= to) continue;
    lo = std::min(lo, price.values[i]);
  }
  return std::isfinite(lo) ? lo : price.at(t);
}

ScenarioResult run_scenario(const HouseConfig& house, Controller& controller, const ExogenousData& data,
                            TimeWindow window, const ScenarioOptions& options,
                            std::optional<double> initial_bess_soc) {
  house.validate();
  options.ev.validate();
  const Seconds dt = options.inner_dt;
  if (dt <= Seconds{0} || kEmsStep % dt != Seconds{0})
    throw std::invalid_argument("inner step must divide the 15-minute EMS step");
  if (window.to <= window.from) throw std::invalid_argument("empty simulation window");
  if (floor_to(window.from, kEmsStep) != window.from || (window.to - window.from) % kEmsStep != Seconds{0})
    throw std::invalid_argument("simulation window must be aligned to 15 minutes");
  if (!(options.fallback_threshold > 0.0)) throw std::invalid_argument("fallback threshold must be positive");
  require_coverage(data.load_kw, "load", window.from, window.to);
  require_coverage(data.pv_kw, "pv", window.from, window.to);
  require_coverage(data.price, "price", window.from, window.to);
  if (!data.reactive_kvar.empty()) require_coverage(data.reactive_kvar, "reactive power", window.from, window.to);

  const EvParams& ev = options.ev;
  const double dt_h = to_hours(dt);
  const bool step_mode = dt == kEmsStep;
  const int inner_steps = static_cast<int>(kEmsStep / dt);
  const DecisionContext dctx{house, ev, data, window, options.switch_hour};

  ScenarioResult result;
  SimState state;
  state.time = window.from;
  state.bess_soc = std::clamp(initial_bess_soc.value_or(1.0), 0.0, 1.0);
  SessionTracker sessions(data.sessions, window, dt);
  Timestamp bess_commit_until = window.from;
  Timestamp ev_commit_until = window.from;
  result.steps.reserve(static_cast<std::size_t>((window.to - window.from) / kEmsStep));

  for (Timestamp t = window.from; t < window.to; t += kEmsStep) {
    sessions.update(t, state, result.sessions);
    state.time = t;

    Observation obs;
    obs.time = t;
    obs.load_kw = data.load_kw.at(t);
    obs.pv_kw = data.pv_kw.at(t);
    obs.bess_soc = state.bess_soc;
    obs.ev_soc = state.ev_soc;
    obs.price = data.price.at(t);
    obs.hour = hour_of_day(t);
    obs.day_of_week = day_of_week(t);
    obs.shifted_price = obs.price - day_min_price(data.price, t, options.switch_hour);
    obs.time_to_switch = next_switch(t, options.switch_hour) - t;
    obs.session = state.active_session;

    const ActionPair action = controller.decide(obs, dctx);

    StepTrace tr;
    tr.time = t;
    tr.controller_degraded = controller.degraded();
    const double load = obs.load_kw;
    const double pv = obs.pv_kw;
    const double q = data.reactive_at(t);
    double ev_sum = 0.0, bess_sum = 0.0, grid_sum = 0.0;

    for (int k = 0; k < inner_steps; ++k) {
      const Timestamp tt = t + dt * k;
      if (k > 0) sessions.update(tt, state, result.sessions);
      state.time = tt;
      const auto& cur = sessions.current();
      const std::optional<double> ev_goal =
          cur ? std::optional<double>(cur->session.soc_goal) : std::nullopt;
      const AssetCaps caps = available_caps(house, state.bess_soc, state.ev_soc, ev_goal, ev, dt_h);

      // Rated-limit clipping.
      double ev_req = std::clamp(action.ev_kw, 0.0, ev.p_max_kw);
      if (ev_req != action.ev_kw) tr.setpoint_clipped = true;
      if (!state.ev_soc) ev_req = 0.0;
      std::optional<double> bess_req;
      if (!action.bess.is_self_consumption()) {
        const double raw = action.bess.kw();
        bess_req = std::clamp(raw, -house.bess_max_charge_kw, house.bess_max_discharge_kw);
        if (*bess_req != raw) tr.setpoint_clipped = true;
        if (*bess_req < 0.0 && state.bess_soc >= house.bess_soc_cap) bess_req.reset();
      }
      double ev_kw = std::min(ev_req, caps.ev_kw);
      double bess_kw = bess_req ? *bess_req : self_consumption_setpoint(load, pv, ev_kw, caps);

      if (options.enforced_charging) {
        const Timestamp bess_target = next_switch(tt, options.switch_hour);
        if (step_mode) {
          if (auto m = enforced_min_charge(Asset::Bess, state.bess_soc, -bess_kw, tt, dt, house.bess_soc_cap,
                                           bess_target, house, ev);
              m && *m > -bess_kw) {
            bess_kw = -*m;
            tr.enforced_bess = true;
          }
          if (cur) {
            if (auto m = enforced_min_charge(Asset::Ev, *state.ev_soc, ev_kw, tt, dt, cur->session.soc_goal,
                                             cur->end, house, ev);
                m && *m > ev_kw) {
              ev_kw = *m;
              tr.enforced_ev = true;
            }
          }
        } else {
          if (tt >= bess_commit_until &&
              enforced_charge_override(state, house.bess_soc_cap, bess_target, Asset::Bess, house, ev))
            bess_commit_until = tt + kEnforcedCommit;
          if (tt < bess_commit_until) {
            bess_kw = -house.bess_max_charge_kw;
            tr.enforced_bess = true;
          } else if (bess_kw > 0.0) {
            // Discharging a full battery right before the switch.
            if (auto m = enforced_min_charge(Asset::Bess, state.bess_soc, -bess_kw, tt, dt, house.bess_soc_cap,
                                             bess_target, house, ev);
                m && *m > -bess_kw) {
              bess_kw = -*m;
              tr.enforced_bess = true;
            }
          }
          if (cur) {
            if (tt >= ev_commit_until &&
                enforced_charge_override(state, cur->session.soc_goal, cur->end, Asset::Ev, house, ev))
              ev_commit_until = tt + kEnforcedCommit;
            if (tt < ev_commit_until) {
              ev_kw = ev_max_power(*state.ev_soc, ev);
              tr.enforced_ev = true;
            }
          } else {
            ev_commit_until = tt;
          }
        }
      }

      if (options.safety) {
        SafetyContext sctx;
        sctx.load_kw = load;
        sctx.pv_kw = pv;
        sctx.reactive_kvar = q;
        sctx.bess_soc = state.bess_soc;
        sctx.ev_soc = state.ev_soc;
        sctx.ev_soc_goal = ev_goal;
        sctx.ev = ev;
        sctx.house = house;
        sctx.mode = options.mode;
        sctx.step_hours = dt_h;
        const SafetyResult sr =
            apply_safety(ActionPair{BessCommand::power(bess_kw), ev_kw}, sctx, options.fallback_threshold);
        if (sr.activated) {
          tr.safety_activated = true;
          tr.fallback_used = tr.fallback_used || sr.fallback_used;
          double safe_ev = std::clamp(sr.safe_actions.ev_kw, 0.0, caps.ev_kw);
          double safe_bess = sr.safe_actions.bess.is_self_consumption()
                                 ? self_consumption_setpoint(load, pv, safe_ev, caps)
                                 : sr.safe_actions.bess.kw();
          tr.correction_kw = std::max(tr.correction_kw, std::hypot(safe_bess - bess_kw, safe_ev - ev_kw));
          bess_kw = safe_bess;
          ev_kw = safe_ev;
        }
      }

      bess_kw = std::clamp(bess_kw, -caps.bess_charge_kw, caps.bess_discharge_kw);
      ev_kw = std::clamp(ev_kw, 0.0, caps.ev_kw);

      const BessStepResult br = bess_step(state.bess_soc, bess_kw, dt_h, house);
      state.bess_soc = br.soc;
      if (state.ev_soc && ev_kw > 0.0) state.ev_soc = ev_soc_step(*state.ev_soc, ev_kw, dt_h, ev);
      if (!state.ev_soc) ev_kw = 0.0;

      const double grid = grid_power(load, ev_kw, pv, br.realized_kw);
      tr.imported_kwh += std::max(-grid, 0.0) * dt_h;
      tr.exported_kwh += std::max(grid, 0.0) * dt_h;
      const double excess = grid_excess_kw(grid, q, house, options.mode);
      if (excess > kExceedanceTolKw) {
        tr.exceedance_kw = std::max(tr.exceedance_kw, excess);
        tr.exceedance_kwh += excess * dt_h;
      }
      ev_sum += ev_kw;
      bess_sum += br.realized_kw;
      grid_sum += grid;
    }

    const double n = static_cast<double>(inner_steps);
    tr.load_kw = load;
    tr.pv_kw = pv;
    tr.ev_kw = ev_sum / n;
    tr.bess_kw = bess_sum / n;
    tr.grid_kw = grid_sum / n;
    tr.bess_soc = state.bess_soc;
    tr.ev_soc = state.ev_soc;
    if (tr.safety_activated) ++result.safety_activations;
    if (tr.fallback_used) ++result.fallback_uses;
    if (tr.controller_degraded) ++result.degraded_steps;
    result.exceedance_wh += tr.exceedance_kwh * 1000.0;
    controller.observe(tr);
    result.steps.push_back(tr);
  }

  state.time = window.to;
  if (sessions.current()) {
    const bool truncated = sessions.current()->end > window.to;
    sessions.close(state, result.sessions, truncated);
  }
  result.final_state = state;
  return result;
}

}  // namespace hems
