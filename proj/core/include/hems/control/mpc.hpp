#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "hems/forecast/forecast.hpp"
#include "hems/mathprog/linear_program.hpp"
#include "hems/sim/simulator.hpp"
#include "hems/tariff/tariff.hpp"

namespace hems {

// Everything the MPC model needs at one decision instant. Vectors hold one value per
// 15-minute step of the horizon.
struct MpcInputs {
  double bess_soc = 1.0;
  std::optional<double> ev_soc;                         // connected EV
  std::optional<forecast::SessionForecast> ev_session;  // required with ev_soc
  Timestamp now{};
  std::vector<double> load_kw;
  std::vector<double> pv_kw;
  std::vector<double> day_ahead;  // EUR/kWh
  double previous_peak_kw = 2.5;
  // The horizon ends at the switch time, where the BESS has to be at its SOC cap.
  bool terminal_at_switch = true;
  // Lower bound on the first-step EV power from the enforced-charging rule.
  double ev_min_first_kw = 0.0;

  int horizon() const { return static_cast<int>(load_kw.size()); }
};

struct MpcSettings {
  TariffParams tariff;
  double slack_penalty = 1e4;  // EUR per kWh of missed terminal energy
  // Per-step SOC floors that keep the plan ahead of the enforced-charging deadline.
  bool deadline_bounds = true;
  // Charge/discharge exclusivity binaries on every step instead of only where
  // spilling energy can pay (negative effective prices).
  bool binaries_everywhere = false;
  mathprog::SolverOptions solver;
};

// Column indices of the model; -1 where a variable does not exist.
struct MpcModel {
  mathprog::LinearProgram lp;
  int horizon = 0;
  int ev_steps = 0;
  std::vector<int> charge, discharge, mode, soc, ev, ev_soc, offtake, injection;
  int peak = -1;
  int bess_slack = -1;
  int ev_slack = -1;
};

MpcModel mpc_build(const MpcInputs& in, const HouseConfig& house, const EvParams& ev,
                   const MpcSettings& settings = {});

struct MpcDecision {
  ActionPair action;
  mathprog::MipSolution solution;
  bool fallback = false;    // solver failed; RBC action returned
  bool slack_used = false;  // a terminal goal could not be met exactly
};

MpcDecision mpc_solve(const MpcInputs& in, const HouseConfig& house, const EvParams& ev,
                      const MpcSettings& settings = {});

// Builds the inputs from the simulator's observation and the given forecasters.
MpcInputs mpc_inputs(const Observation& obs, const DecisionContext& ctx,
                     const forecast::SeriesForecaster& load, const forecast::SeriesForecaster& pv,
                     const forecast::SessionForecaster& sessions, double previous_peak_kw);

// One MPC decision; falls back to RBC when the horizon is empty or the solver fails.
MpcDecision mpc_step(const Observation& obs, const DecisionContext& ctx, const forecast::SeriesForecaster& load,
                     const forecast::SeriesForecaster& pv, const forecast::SessionForecaster& sessions,
                     double previous_peak_kw, const MpcSettings& settings = {});

class MpcController final : public Controller {
 public:
  MpcController(std::unique_ptr<forecast::SeriesForecaster> load, std::unique_ptr<forecast::SeriesForecaster> pv,
                std::unique_ptr<forecast::SessionForecaster> sessions, MpcSettings settings = {},
                std::string name = "MPC");

  // Perfect-foresight benchmark.
  static std::unique_ptr<MpcController> perfect(MpcSettings settings = {});
  // Persistence load/PV and kNN sessions trained on `history`.
  static std::unique_ptr<MpcController> forecasting(const std::vector<EvSession>& history, const EvParams& ev,
                                                    int k = 5, MpcSettings settings = {});

  std::string name() const override { return name_; }
  ActionPair decide(const Observation& obs, const DecisionContext& ctx) override;
  void observe(const StepTrace& trace) override;
  bool degraded() const override { return degraded_; }

  // Monthly offtake peak seen so far; reset to the tariff floor in a new month.
  double previous_peak_kw() const { return peak_kw_; }
  void set_previous_peak(double kw, std::chrono::year_month month);
  int solver_failures() const { return failures_; }

 private:
  std::unique_ptr<forecast::SeriesForecaster> load_;
  std::unique_ptr<forecast::SeriesForecaster> pv_;
  std::unique_ptr<forecast::SessionForecaster> sessions_;
  MpcSettings settings_;
  std::string name_;
  double peak_kw_;
  std::optional<std::chrono::year_month> month_;
  bool degraded_ = false;
  int failures_ = 0;
};

}  // namespace hems
