#include "hems/control/mpc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hems/control/rbc.hpp"
#include "hems/sim/physics.hpp"

namespace hems {

using mathprog::kInfinity;
using mathprog::LinearProgram;
using mathprog::RowSense;
using mathprog::Term;

namespace {

std::string idx(const char* base, int t) { return std::string(base) + "_" + std::to_string(t); }

int ev_steps_for(const MpcInputs& in) {
  if (!in.ev_soc || !in.ev_session) return 0;
  const Timestamp dep = floor_to(in.ev_session->departure, kEmsStep);
  const long steps = dep > in.now ? static_cast<long>((dep - in.now) / kEmsStep) : 0;
  return static_cast<int>(std::clamp<long>(steps, 1, in.horizon()));
}

}  // namespace

MpcModel mpc_build(const MpcInputs& in, const HouseConfig& house, const EvParams& ev, const MpcSettings& settings) {
  const int H = in.horizon();
  if (H < 1) throw std::invalid_argument("MPC horizon must be at least one step");
  if (in.pv_kw.size() != in.load_kw.size() || in.day_ahead.size() != in.load_kw.size())
    throw std::invalid_argument("MPC inputs: forecast lengths differ");
  if (in.ev_soc.has_value() != in.ev_session.has_value())
    throw std::invalid_argument("MPC inputs: EV SOC and session forecast go together");

  const double dt = kEmsStepHours;
  const double E = house.bess_capacity_kwh;
  const double eta = house.bess_efficiency;
  const double chg = house.bess_max_charge_kw;
  const double dis = house.bess_max_discharge_kw;
  const double cap = house.bess_soc_cap;
  const double s_max = std::max(cap, in.bess_soc);
  const double limit = house.mpc_grid_limit_kw;
  const auto& tp = settings.tariff;

  MpcModel m;
  m.horizon = H;
  m.ev_steps = ev_steps_for(in);
  auto& lp = m.lp;
  const auto n = static_cast<std::size_t>(H);
  m.charge.assign(n, -1);
  m.discharge.assign(n, -1);
  m.mode.assign(n, -1);
  m.soc.assign(n, -1);
  m.ev.assign(n, -1);
  m.ev_soc.assign(n, -1);
  m.offtake.assign(n, -1);
  m.injection.assign(n, -1);

  const double ev_goal = in.ev_session ? in.ev_session->final_soc : 0.0;
  const double ev_v0 = in.ev_soc.value_or(0.0);
  const double ev_vmax = std::max(ev_goal, ev_v0);
  const double ev_eta_c = ev.charge_efficiency * dt / ev.capacity_kwh;
  const double ev_k = (ev.p_max_kw - ev.p_min_at_full_kw) / (1.0 - ev.soc_cc_cv);

  for (int t = 0; t < H; ++t) {
    const auto u = static_cast<std::size_t>(t);
    const SpotPrices sp = spot_prices(in.day_ahead[u], tp);
    m.charge[u] = lp.add_variable(idx("pch", t), 0.0, chg);
    m.discharge[u] = lp.add_variable(idx("pdi", t), 0.0, dis);
    if (settings.binaries_everywhere || sp.injection < 0.0 || sp.offtake + tp.offtake_extras < 0.0) {
      m.mode[u] = lp.add_binary(idx("gamma", t));
    }
    m.soc[u] = lp.add_variable(idx("soc", t), 0.0, s_max);
    if (t < m.ev_steps) {
      double lo = 0.0;
      if (t == 0) {
        // Largest first-step power compatible with the goal cap and the CC-CV row.
        const double by_goal = (ev_vmax - ev_v0) / ev_eta_c;
        const double by_cccv = (ev.p_max_kw + ev_k * ev.soc_cc_cv - ev_k * ev_v0) / (1.0 + ev_k * ev_eta_c);
        lo = std::clamp(in.ev_min_first_kw, 0.0, std::max(0.0, std::min({ev.p_max_kw, by_goal, by_cccv})));
      }
      m.ev[u] = lp.add_variable(idx("ev", t), lo, ev.p_max_kw);
      m.ev_soc[u] = lp.add_variable(idx("evsoc", t), 0.0, ev_vmax);
    }
    m.offtake[u] = lp.add_variable(idx("eo", t), 0.0, limit * dt, sp.offtake + tp.offtake_extras);
    m.injection[u] = lp.add_variable(idx("ei", t), 0.0, limit * dt, -sp.injection);
  }
  m.peak = lp.add_variable("peak", in.previous_peak_kw, kInfinity, tp.peak_price);

  for (int t = 0; t < H; ++t) {
    const auto u = static_cast<std::size_t>(t);
    std::vector<Term> soc_row{{m.soc[u], 1.0}, {m.charge[u], -eta * dt / E}, {m.discharge[u], dt / (eta * E)}};
    if (t > 0) soc_row.push_back({m.soc[u - 1], -1.0});
    lp.add_row(idx("soc_dyn", t), std::move(soc_row), RowSense::Equal, t == 0 ? in.bess_soc : 0.0);

    if (m.mode[u] >= 0) {
      lp.add_row(idx("excl_ch", t), {{m.charge[u], 1.0}, {m.mode[u], -chg}}, RowSense::LessEqual, 0.0);
      lp.add_row(idx("excl_dis", t), {{m.discharge[u], 1.0}, {m.mode[u], dis}}, RowSense::LessEqual, dis);
    }

    std::vector<Term> bal{{m.injection[u], 1.0}, {m.offtake[u], -1.0}, {m.charge[u], dt}, {m.discharge[u], -dt}};
    if (m.ev[u] >= 0) bal.push_back({m.ev[u], dt});
    lp.add_row(idx("balance", t), std::move(bal), RowSense::Equal, dt * (in.pv_kw[u] - in.load_kw[u]));

    lp.add_row(idx("peak", t), {{m.peak, 1.0}, {m.offtake[u], -1.0 / dt}}, RowSense::GreaterEqual, 0.0);

    if (m.ev[u] >= 0) {
      std::vector<Term> evr{{m.ev_soc[u], 1.0}, {m.ev[u], -ev_eta_c}};
      if (t > 0) evr.push_back({m.ev_soc[u - 1], -1.0});
      lp.add_row(idx("ev_dyn", t), std::move(evr), RowSense::Equal, t == 0 ? ev_v0 : 0.0);
      lp.add_row(idx("ev_cccv", t), {{m.ev[u], 1.0}, {m.ev_soc[u], ev_k}}, RowSense::LessEqual,
                 ev.p_max_kw + ev_k * ev.soc_cc_cv);
    }
  }

  if (in.terminal_at_switch) {
    m.bess_slack = lp.add_variable("bess_slack", 0.0, 1.0, settings.slack_penalty * E);
    lp.add_row("bess_terminal", {{m.soc[n - 1], 1.0}, {m.bess_slack, 1.0}}, RowSense::GreaterEqual, cap);
    if (settings.deadline_bounds) {
      // Charging at full power from the end of step t must still meet the cap one
      // buffer before the switch, the buffer being sized on the SOC at the start of t.
      const auto lim = default_buffer(Asset::Bess);
      const double a = E / (eta * chg);
      const double db = to_hours(lim.b_max) - to_hours(lim.b_min);
      for (int t = 0; t + 1 < H; ++t) {
        const auto u = static_cast<std::size_t>(t);
        const double avail = (H - 1 - t) * dt - to_hours(lim.b_min);
        double rhs = (a + db) * cap - avail;
        if (rhs <= 0.0) continue;
        std::vector<Term> row{{m.soc[u], a}, {m.bess_slack, a}};
        if (t > 0) {
          row.push_back({m.soc[u - 1], db});
        } else {
          rhs -= db * in.bess_soc;
        }
        lp.add_row(idx("bess_deadline", t), std::move(row), RowSense::GreaterEqual, rhs);
      }
    }
  }

  if (m.ev_steps > 0 && ev_goal > ev_v0) {
    const auto last = static_cast<std::size_t>(m.ev_steps - 1);
    m.ev_slack = lp.add_variable("ev_slack", 0.0, 1.0, settings.slack_penalty * ev.capacity_kwh);
    lp.add_row("ev_terminal", {{m.ev_soc[last], 1.0}, {m.ev_slack, 1.0}}, RowSense::GreaterEqual, ev_goal);
    if (settings.deadline_bounds) {
      const auto lim = default_buffer(Asset::Ev);
      const double a = ev.capacity_kwh / (ev.charge_efficiency * ev.p_max_kw);
      const double db = to_hours(lim.b_max) - to_hours(lim.b_min);
      for (int t = 0; t + 1 < m.ev_steps; ++t) {
        const auto u = static_cast<std::size_t>(t);
        const double avail = (m.ev_steps - 1 - t) * dt - to_hours(lim.b_min);
        double rhs = (a + db) * ev_goal - avail;
        if (rhs <= 0.0) continue;
        std::vector<Term> row{{m.ev_soc[u], a}, {m.ev_slack, a}};
        if (t > 0) {
          row.push_back({m.ev_soc[u - 1], db});
        } else {
          rhs -= db * ev_v0;
        }
        lp.add_row(idx("ev_deadline", t), std::move(row), RowSense::GreaterEqual, rhs);
      }
    }
  }
  return m;
}

MpcDecision mpc_solve(const MpcInputs& in, const HouseConfig& house, const EvParams& ev, const MpcSettings& settings) {
  const MpcModel m = mpc_build(in, house, ev, settings);
  MpcDecision d;
  d.solution = mathprog::solve_milp(m.lp, settings.solver);
  const bool usable = d.solution.status == mathprog::SolveStatus::Optimal ||
                      (d.solution.status == mathprog::SolveStatus::IterationLimit && !d.solution.values.empty());
  if (!usable) {
    d.fallback = true;
    d.action = ActionPair{BessCommand::self_consumption(), in.ev_soc ? ev.p_max_kw : 0.0};
    return d;
  }
  const auto& x = d.solution.values;
  double bess = x[static_cast<std::size_t>(m.discharge[0])] - x[static_cast<std::size_t>(m.charge[0])];
  if (std::abs(bess) < 1e-9) bess = 0.0;
  double evp = m.ev[0] >= 0 ? x[static_cast<std::size_t>(m.ev[0])] : 0.0;
  if (evp < 1e-9) evp = 0.0;
  d.action = ActionPair{BessCommand::power(bess), evp};
  const auto slack = [&](int j) { return j >= 0 && x[static_cast<std::size_t>(j)] > 1e-7; };
  d.slack_used = slack(m.bess_slack) || slack(m.ev_slack);
  return d;
}

MpcInputs mpc_inputs(const Observation& obs, const DecisionContext& ctx, const forecast::SeriesForecaster& load,
                     const forecast::SeriesForecaster& pv, const forecast::SessionForecaster& sessions,
                     double previous_peak_kw) {
  MpcInputs in;
  in.now = obs.time;
  in.bess_soc = obs.bess_soc;
  in.previous_peak_kw = previous_peak_kw;
  const Timestamp sw = next_switch(obs.time, ctx.switch_hour);
  const Timestamp end = std::min(sw, ctx.window.to);
  in.terminal_at_switch = end == sw;
  const int H = end > obs.time ? static_cast<int>((end - obs.time) / kEmsStep) : 0;
  if (H == 0) return in;
  in.load_kw = load.forecast(ctx.data.load_kw, obs.time, H).values;
  in.pv_kw = pv.forecast(ctx.data.pv_kw, obs.time, H).values;
  in.load_kw[0] = obs.load_kw;
  in.pv_kw[0] = obs.pv_kw;
  in.day_ahead.reserve(static_cast<std::size_t>(H));
  for (int i = 0; i < H; ++i) in.day_ahead.push_back(ctx.data.price.at(obs.time + kEmsStep * i));
  if (obs.session && obs.ev_soc) {
    auto f = sessions.forecast(*obs.session, obs.time);
    f.departure = std::min(f.departure, end);
    in.ev_soc = obs.ev_soc;
    in.ev_session = f;
    const Timestamp target = floor_to(f.departure, kEmsStep);
    if (target > obs.time) {
      if (auto p = enforced_min_charge(Asset::Ev, *obs.ev_soc, 0.0, obs.time, kEmsStep, f.final_soc, target,
                                       ctx.house, ctx.ev))
        in.ev_min_first_kw = *p;
    }
  }
  return in;
}

MpcDecision mpc_step(const Observation& obs, const DecisionContext& ctx, const forecast::SeriesForecaster& load,
                     const forecast::SeriesForecaster& pv, const forecast::SessionForecaster& sessions,
                     double previous_peak_kw, const MpcSettings& settings) {
  const MpcInputs in = mpc_inputs(obs, ctx, load, pv, sessions, previous_peak_kw);
  if (in.horizon() == 0) {
    MpcDecision d;
    d.action = rbc_step(obs, ctx.ev);
    return d;
  }
  return mpc_solve(in, ctx.house, ctx.ev, settings);
}

MpcController::MpcController(std::unique_ptr<forecast::SeriesForecaster> load,
                             std::unique_ptr<forecast::SeriesForecaster> pv,
                             std::unique_ptr<forecast::SessionForecaster> sessions, MpcSettings settings,
                             std::string name)
    : load_(std::move(load)),
      pv_(std::move(pv)),
      sessions_(std::move(sessions)),
      settings_(std::move(settings)),
      name_(std::move(name)),
      peak_kw_(settings_.tariff.peak_floor_kw) {
  if (!load_ || !pv_ || !sessions_) throw std::invalid_argument("MPC controller needs all forecasters");
}

std::unique_ptr<MpcController> MpcController::perfect(MpcSettings settings) {
  return std::make_unique<MpcController>(std::make_unique<forecast::PerfectForecaster>(),
                                         std::make_unique<forecast::PerfectForecaster>(),
                                         std::make_unique<forecast::PerfectSessionForecaster>(), std::move(settings),
                                         "MPC-P");
}

std::unique_ptr<MpcController> MpcController::forecasting(const std::vector<EvSession>& history, const EvParams& ev,
                                                          int k, MpcSettings settings) {
  std::unique_ptr<forecast::SessionForecaster> sessions;
  if (history.empty()) {
    sessions = std::make_unique<forecast::PerfectSessionForecaster>();
  } else {
    sessions = std::make_unique<forecast::KnnSessionForecaster>(forecast::session_records(history, ev), ev, k);
  }
  return std::make_unique<MpcController>(std::make_unique<forecast::PersistenceForecaster>(),
                                         std::make_unique<forecast::PersistenceForecaster>(), std::move(sessions),
                                         std::move(settings), "MPC");
}

void MpcController::set_previous_peak(double kw, std::chrono::year_month month) {
  month_ = month;
  peak_kw_ = std::max(kw, settings_.tariff.peak_floor_kw);
}

ActionPair MpcController::decide(const Observation& obs, const DecisionContext& ctx) {
  const auto ym = year_month_of(obs.time);
  if (!month_ || *month_ != ym) set_previous_peak(settings_.tariff.peak_floor_kw, ym);
  degraded_ = false;
  try {
    const MpcDecision d = mpc_step(obs, ctx, *load_, *pv_, *sessions_, peak_kw_, settings_);
    if (d.fallback) {
      degraded_ = true;
      ++failures_;
    }
    return d.action;
  } catch (const DataGapError&) {
    // Forecast history not available yet.
    degraded_ = true;
    ++failures_;
    return rbc_step(obs, ctx.ev);
  }
}

void MpcController::observe(const StepTrace& trace) {
  const auto ym = year_month_of(trace.time);
  if (!month_ || *month_ != ym) set_previous_peak(settings_.tariff.peak_floor_kw, ym);
  peak_kw_ = std::max(peak_kw_, trace.imported_kwh / kEmsStepHours);
}

}  // namespace hems
