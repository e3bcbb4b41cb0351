#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "hems/control/mpc.hpp"
#include "hems/control/policy_tree.hpp"
#include "hems/harness/schedule.hpp"
#include "hems/sim/simulator.hpp"
#include "hems/tariff/tariff.hpp"

namespace hems {

inline constexpr std::string_view kMpcPerfectName = "MPC-P";

struct ExperimentHouse {
  HouseConfig house;
  ExogenousData data;  // covers the experiment and the day before it
  TreePair trees;      // TreeC policy of this house
};

struct ExperimentOptions {
  Timestamp start{};  // first switch instant
  ScenarioOptions scenario;
  TariffParams tariff;
  MpcSettings mpc;
  bool mpc_perfect_reference = true;
  std::uint64_t stub_seed = 0;
  int knn_neighbours = 5;
  double initial_bess_soc = 1.0;
};

// One simulated (day, house) run.
struct DayRecord {
  int day = 0;
  Timestamp start{};
  int house = 1;
  std::string ems;
  bool ok = false;
  std::string error;
  CostBreakdown import_export;
  CostBreakdown net;
  double imported_kwh = 0.0;
  double exported_kwh = 0.0;
  int safety_activations = 0;
  int fallback_uses = 0;
  int degraded_steps = 0;
  double exceedance_wh = 0.0;
  int sessions = 0;
  int sessions_reached = 0;

  bool operator==(const DayRecord&) const = default;
};

struct EmsSummary {
  std::string ems;
  int days = 0;
  int failed_days = 0;
  CostBreakdown import_export;
  CostBreakdown net;
  double imported_kwh = 0.0;
  double exported_kwh = 0.0;
  int safety_activations = 0;
  int fallback_uses = 0;
  double exceedance_wh = 0.0;
  int sessions = 0;
  int sessions_reached = 0;
  // Import/export totals over the (day, house) pairs where this EMS and MPC-P both succeeded.
  int matched_days = 0;
  double matched_total = 0.0;
  double matched_reference_total = 0.0;

  double net_kwh() const { return imported_kwh - exported_kwh; }
};

struct ExperimentReport {
  std::vector<DayRecord> days;  // scheduled runs, each followed by its MPC-P run when enabled

  // One row per EMS in schedule order (RL-stub, RBC, TreeC, MPC), then MPC-P when present.
  std::vector<EmsSummary> summary() const;
  const DayRecord* reference_for(const DayRecord& r) const;
  bool operator==(const ExperimentReport&) const = default;
};

// Simulates every scheduled day from 15:00 to 15:00. Each house carries its BESS SOC
// from one of its days to the next; a failed day is recorded and the next day of
// that house starts from the initial SOC.
ExperimentReport run_experiment(const Schedule& schedule, const std::vector<ExperimentHouse>& houses,
                                const ExperimentOptions& options,
                                const std::function<void(const DayRecord&)>& progress = {});

// Fills a record from a finished run.
DayRecord summarize_run(const ScenarioResult& r, const TimeSeries& price, const TariffParams& tariff);

enum class ReportFormat { Text, Csv };

std::string render_report(const ExperimentReport& report, ReportFormat format);
// Reads the per-run CSV written by render_report.
ExperimentReport parse_report_csv(std::string_view text);

}  // namespace hems
