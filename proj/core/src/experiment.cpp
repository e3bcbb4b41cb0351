#include "hems/harness/experiment.hpp"

#include <algorithm>
#include <map>
#include <memory>

#include "hems/control/rbc.hpp"

namespace hems {

namespace {

void add(CostBreakdown& a, const CostBreakdown& b) {
  a.day_ahead += b.day_ahead;
  a.offtake_extras += b.offtake_extras;
  a.peak += b.peak;
  a.yearly += b.yearly;
  a.total += b.total;
}

std::unique_ptr<Controller> make_controller(Ems ems, const ExperimentHouse& h, const ExperimentOptions& o, int day,
                                            Timestamp start, double house_peak) {
  switch (ems) {
    case Ems::RlStub:
      return std::make_unique<ExplorationController>(o.stub_seed + 1000u * static_cast<std::uint64_t>(day) +
                                                     static_cast<std::uint64_t>(h.house.house_id));
    case Ems::Rbc:
      return std::make_unique<RbcController>();
    case Ems::TreeC:
      return std::make_unique<TreeController>(h.trees);
    case Ems::Mpc: {
      std::vector<EvSession> history;
      for (const auto& s : h.data.sessions)
        if (s.departure <= start) history.push_back(s);
      auto c = MpcController::forecasting(history, o.scenario.ev, o.knn_neighbours, o.mpc);
      c->set_previous_peak(house_peak, year_month_of(start));
      return c;
    }
  }
  throw std::logic_error("unknown EMS");
}

}  // namespace

DayRecord summarize_run(const ScenarioResult& r, const TimeSeries& price, const TariffParams& tariff) {
  DayRecord d;
  const std::span<const StepTrace> steps(r.steps);
  d.import_export = total_cost(steps, price, tariff);
  d.net = net_consumption_cost(steps, price, tariff);
  for (const auto& s : r.steps) {
    d.imported_kwh += s.imported_kwh;
    d.exported_kwh += s.exported_kwh;
  }
  d.safety_activations = r.safety_activations;
  d.fallback_uses = r.fallback_uses;
  d.degraded_steps = r.degraded_steps;
  d.exceedance_wh = r.exceedance_wh;
  d.sessions = static_cast<int>(r.sessions.size());
  for (const auto& s : r.sessions) d.sessions_reached += s.reached_goal ? 1 : 0;
  d.ok = true;
  return d;
}

ExperimentReport run_experiment(const Schedule& schedule, const std::vector<ExperimentHouse>& houses,
                                const ExperimentOptions& options,
                                const std::function<void(const DayRecord&)>& progress) {
  if (houses.size() != static_cast<std::size_t>(kHouseCount))
    throw std::invalid_argument("experiment needs exactly 4 houses");
  ExperimentReport report;
  std::vector<double> soc(houses.size(), options.initial_bess_soc);
  // Monthly offtake peak per house, seen by the MPC as the already-billed peak.
  std::vector<std::map<std::chrono::year_month, double>> peaks(houses.size());

  for (std::size_t d = 0; d < schedule.days.size(); ++d) {
    const Timestamp start = options.start + std::chrono::days(static_cast<long>(d));
    const TimeWindow window{start, start + std::chrono::days(1)};
    const auto month = year_month_of(start);
    for (std::size_t hi = 0; hi < houses.size(); ++hi) {
      const auto& h = houses[hi];
      const Ems ems = schedule.days[d][hi];
      auto peak_it = peaks[hi].find(month);
      const double house_peak = peak_it == peaks[hi].end() ? options.tariff.peak_floor_kw : peak_it->second;
      const double day_soc = soc[hi];

      auto run = [&](Controller& c) {
        std::pair<DayRecord, std::optional<ScenarioResult>> out;
        try {
          out.second = run_scenario(h.house, c, h.data, window, options.scenario, day_soc);
          out.first = summarize_run(*out.second, h.data.price, options.tariff);
        } catch (const std::exception& e) {
          out.first = DayRecord{};
          out.first.error = e.what();
          out.second.reset();
        }
        return out;
      };
      auto stamp = [&](DayRecord& rec, const std::string& name) {
        rec.day = static_cast<int>(d);
        rec.start = start;
        rec.house = h.house.house_id;
        rec.ems = name;
      };

      std::pair<DayRecord, std::optional<ScenarioResult>> out;
      try {
        const auto c = make_controller(ems, h, options, static_cast<int>(d), start, house_peak);
        out = run(*c);
      } catch (const std::exception& e) {
        out.first.error = e.what();
      }
      stamp(out.first, ems_name(ems));
      if (out.second) {
        soc[hi] = out.second->final_state.bess_soc;
        double& p = peaks[hi][month];
        p = std::max(p, options.tariff.peak_floor_kw);
        for (const auto& s : out.second->steps) p = std::max(p, s.imported_kwh / kEmsStepHours);
      } else {
        soc[hi] = options.initial_bess_soc;
      }
      report.days.push_back(out.first);
      if (progress) progress(report.days.back());

      if (options.mpc_perfect_reference) {
        auto ref = MpcController::perfect(options.mpc);
        ref->set_previous_peak(house_peak, month);
        auto rr = run(*ref);
        stamp(rr.first, std::string(kMpcPerfectName));
        report.days.push_back(rr.first);
        if (progress) progress(report.days.back());
      }
    }
  }
  return report;
}

const DayRecord* ExperimentReport::reference_for(const DayRecord& r) const {
  for (const auto& x : days)
    if (x.ems == kMpcPerfectName && x.day == r.day && x.house == r.house) return &x;
  return nullptr;
}

std::vector<EmsSummary> ExperimentReport::summary() const {
  std::vector<std::string> names;
  for (Ems e : {Ems::RlStub, Ems::Rbc, Ems::TreeC, Ems::Mpc}) names.emplace_back(ems_name(e));
  names.emplace_back(kMpcPerfectName);
  std::vector<EmsSummary> out;
  for (const auto& name : names) {
    EmsSummary s;
    s.ems = name;
    bool present = false;
    for (const auto& r : days) {
      if (r.ems != name) continue;
      present = true;
      if (!r.ok) {
        ++s.failed_days;
        continue;
      }
      ++s.days;
      add(s.import_export, r.import_export);
      add(s.net, r.net);
      s.imported_kwh += r.imported_kwh;
      s.exported_kwh += r.exported_kwh;
      s.safety_activations += r.safety_activations;
      s.fallback_uses += r.fallback_uses;
      s.exceedance_wh += r.exceedance_wh;
      s.sessions += r.sessions;
      s.sessions_reached += r.sessions_reached;
      if (name == kMpcPerfectName) continue;
      if (const auto* ref = reference_for(r); ref && ref->ok) {
        ++s.matched_days;
        s.matched_total += r.import_export.total;
        s.matched_reference_total += ref->import_export.total;
      }
    }
    if (present) out.push_back(s);
  }
  return out;
}

}  // namespace hems
