#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "hems/control/mpc.hpp"
#include "hems/control/rbc.hpp"
#include "hems/harness/config.hpp"
#include "hems/harness/experiment.hpp"
#include "hems/harness/io.hpp"
#include "hems/harness/schedule.hpp"
#include "hems/harness/synthetic.hpp"
#include "hems/treec/treec.hpp"
#include "json.hpp"

using namespace hems;

namespace {

// Data of one house, either synthetic or read from CSV files.
struct DataArgs {
  int house = 1;
  std::string start = "2023-05-01T15:00:00";
  int days = 7;
  int offset_minutes = 60;
  std::uint64_t synthetic_seed = 0;
  std::string load, pv, price, sessions, reactive;
  int history_days = 0;  // extra days before start kept in the data
  bool no_safety = false;
  int inner_dt = 900;
  std::string grid_limit = "active";

  void add(CLI::App* app) {
    app->add_option("--house", house, "House 1..4")->check(CLI::Range(1, 4));
    app->add_option("--start", start, "First simulated instant (local time)");
    app->add_option("--days", days, "Number of simulated days")->check(CLI::PositiveNumber);
    app->add_option("--offset-minutes", offset_minutes, "Local UTC offset");
    app->add_option("--synthetic-seed", synthetic_seed, "Seed of the synthetic data (used without --load)");
    app->add_option("--load", load, "Load CSV (W)");
    app->add_option("--pv", pv, "PV CSV (W)");
    app->add_option("--price", price, "Day-ahead price CSV (EUR/kWh)");
    app->add_option("--sessions", sessions, "EV session CSV");
    app->add_option("--reactive", reactive, "Reactive power CSV (var)");
    app->add_flag("--no-safety", no_safety, "Disable the safety layer");
    app->add_option("--inner-dt", inner_dt, "Integration step in seconds (divides 900)");
    app->add_option("--grid-limit", grid_limit, "active or apparent")->check(CLI::IsMember({"active", "apparent"}));
  }

  Timestamp start_time() const { return parse_iso(start, offset_minutes); }
  TimeWindow window() const { return {start_time(), start_time() + std::chrono::days(days)}; }

  ScenarioOptions scenario() const {
    ScenarioOptions o;
    o.safety = !no_safety;
    o.inner_dt = Seconds(inner_dt);
    o.mode = grid_limit == "apparent" ? GridLimitMode::ApparentPower : GridLimitMode::ActivePower;
    return o;
  }

  ExogenousData data(const HouseConfig& hc, const EvParams& ev) const {
    if (load.empty()) {
      SyntheticOptions so;
      so.start = start_time() - std::chrono::days(history_days);
      so.days = days + history_days;
      so.seed = synthetic_seed;
      return synthetic_house_data(hc, ev, so);
    }
    if (pv.empty() || price.empty()) throw InputError("--load needs --pv and --price");
    const LoadOptions lo{offset_minutes, 0};
    ExogenousData d;
    d.load_kw = load_timeseries(load, SeriesKind::Load, lo);
    d.pv_kw = load_timeseries(pv, SeriesKind::Pv, lo);
    d.price = load_timeseries(price, SeriesKind::Price, lo);
    if (!reactive.empty()) d.reactive_kvar = load_timeseries(reactive, SeriesKind::Reactive, lo);
    if (!sessions.empty()) d.sessions = adjust_sessions(load_sessions(sessions, lo)).sessions;
    return d;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError(path + ": cannot open file");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error(path + ": cannot write file");
  f << text;
}

std::unique_ptr<Controller> make_controller(const std::string& name, const std::string& trees_path,
                                            const ExogenousData& data, Timestamp start, const EvParams& ev,
                                            std::uint64_t seed) {
  if (name == "rbc") return std::make_unique<RbcController>();
  if (name == "stub") return std::make_unique<ExplorationController>(seed);
  if (name == "mpc-p") return MpcController::perfect();
  if (name == "mpc") {
    std::vector<EvSession> history;
    for (const auto& s : data.sessions)
      if (s.departure <= start) history.push_back(s);
    return MpcController::forecasting(history, ev);
  }
  if (name == "treec") {
    if (trees_path.empty()) throw InputError("treec needs --trees");
    return std::make_unique<TreeController>(parse_tree_pair(read_file(trees_path)));
  }
  throw InputError("unknown controller " + name);
}

void print_costs(const std::string& name, const ScenarioResult& r, const TimeSeries& price) {
  const auto c = total_cost(std::span<const StepTrace>(r.steps), price);
  int reached = 0;
  for (const auto& s : r.sessions) reached += s.reached_goal ? 1 : 0;
  std::printf("%-8s %10.2f %10.2f %10.2f %10.2f %10.2f %8d %12.1f %5d/%-3d\n", name.c_str(), c.day_ahead,
              c.offtake_extras, c.peak, c.yearly, c.total, r.safety_activations, r.exceedance_wh, reached,
              static_cast<int>(r.sessions.size()));
}

void print_cost_header() {
  std::printf("%-8s %10s %10s %10s %10s %10s %8s %12s %9s\n", "EMS", "day-ahead", "extras", "peak", "yearly", "total",
              "safety", "exceed_Wh", "sessions");
}

nlohmann::json synthetic_config(const std::string& start, int days, std::uint64_t seed) {
  nlohmann::json j;
  j["offset_minutes"] = 60;
  j["start"] = start;
  j["days"] = days;
  j["schedule_seed"] = seed;
  j["price"] = "price.csv";
  j["simulation"] = {{"safety", true}, {"grid_limit", "active"}, {"inner_dt_seconds", 900}, {"switch_hour", 15}};
  j["treec"] = {{"days", 7}, {"population", 50}, {"generations", 100}, {"restarts", 1}, {"seed", seed}};
  j["houses"] = nlohmann::json::array();
  for (int h = 1; h <= kHouseCount; ++h) {
    const std::string p = "house" + std::to_string(h) + "_";
    j["houses"].push_back({{"id", h}, {"load", p + "load.csv"}, {"pv", p + "pv.csv"}, {"sessions", p + "sessions.csv"}});
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Home energy management simulator and experiment harness"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate one house with one EMS");
  DataArgs sim_data;
  sim_data.add(sim);
  std::string sim_controller = "rbc", sim_trees, sim_trace;
  std::uint64_t sim_seed = 0;
  sim->add_option("--controller", sim_controller, "rbc, stub, treec, mpc or mpc-p")
      ->check(CLI::IsMember({"rbc", "stub", "treec", "mpc", "mpc-p"}));
  sim->add_option("--trees", sim_trees, "TreeC policy file");
  sim->add_option("--seed", sim_seed, "Seed of the exploration stub");
  sim->add_option("--trace", sim_trace, "Write the per-step trace CSV here");

  // compare
  auto* cmp = app.add_subcommand("compare", "Simulate one house with every EMS on the same data");
  DataArgs cmp_data;
  cmp_data.add(cmp);
  std::string cmp_trees;
  std::uint64_t cmp_seed = 0;
  cmp->add_option("--trees", cmp_trees, "TreeC policy file (TreeC skipped without it)");
  cmp->add_option("--seed", cmp_seed, "Seed of the exploration stub");

  // train-treec
  auto* tr = app.add_subcommand("train-treec", "Train a TreeC policy with PSO and pruning");
  DataArgs tr_data;
  tr_data.add(tr);
  treec::TrainConfig tr_cfg;
  tr_cfg.pso.population = 50;
  tr_cfg.pso.generations = 100;
  tr_cfg.restarts = 1;
  std::string tr_out = "trees.txt", tr_log, tr_dot;
  tr->add_option("--population", tr_cfg.pso.population, "PSO population")->check(CLI::Range(2, 1000000));
  tr->add_option("--generations", tr_cfg.pso.generations, "PSO generations")->check(CLI::NonNegativeNumber);
  tr->add_option("--restarts", tr_cfg.restarts, "Independent PSO runs")->check(CLI::PositiveNumber);
  tr->add_option("--depth", tr_cfg.layout.depth, "Tree depth")->check(CLI::Range(1, 8));
  tr->add_option("--seed", tr_cfg.pso.seed, "PSO seed");
  tr->add_option("--prune-threshold", tr_cfg.prune_threshold, "Accepted relative cost increase per pruning step");
  tr->add_option("--out", tr_out, "Policy output file");
  tr->add_option("--log", tr_log, "Training history CSV");
  tr->add_option("--dot", tr_dot, "Graphviz output prefix");

  // schedule
  auto* sch = app.add_subcommand("schedule", "Generate or check a 48-day house-switching schedule");
  std::uint64_t sch_seed = 0;
  std::string sch_out, sch_check;
  sch->add_option("--seed", sch_seed, "Schedule seed");
  sch->add_option("--out", sch_out, "Write the schedule CSV here instead of stdout");
  sch->add_option("--check", sch_check, "Validate an existing schedule CSV");

  // run-experiment
  auto* exp = app.add_subcommand("run-experiment", "Run the house-switching experiment described by a config");
  std::string exp_config, exp_out, exp_format = "text";
  exp->add_option("--config", exp_config, "Experiment JSON")->required();
  exp->add_option("--out", exp_out, "Write the per-run CSV here");
  exp->add_option("--format", exp_format, "Report printed to stdout")->check(CLI::IsMember({"text", "csv"}));
  bool exp_quiet = false;
  exp->add_flag("--quiet", exp_quiet, "No progress output");

  // report
  auto* rep = app.add_subcommand("report", "Render a report from a per-run CSV");
  std::string rep_in, rep_format = "text";
  rep->add_option("input", rep_in, "Per-run CSV from run-experiment")->required();
  rep->add_option("--format", rep_format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

  // synth-data
  auto* syn = app.add_subcommand("synth-data", "Write synthetic data files and an experiment config");
  std::string syn_dir, syn_start = "2023-05-01T15:00:00";
  int syn_days = 48;
  std::uint64_t syn_seed = 0;
  syn->add_option("--out", syn_dir, "Output directory")->required();
  syn->add_option("--start", syn_start, "First experiment day (15:00 local)");
  syn->add_option("--days", syn_days, "Experiment days")->check(CLI::Range(1, 48));
  syn->add_option("--seed", syn_seed, "Data seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      const auto hc = HouseConfig::reference(sim_data.house);
      const EvParams ev;
      sim_data.history_days = sim_controller == "mpc" ? 1 : 0;
      const auto data = sim_data.data(hc, ev);
      auto c = make_controller(sim_controller, sim_trees, data, sim_data.start_time(), ev, sim_seed);
      const auto r = run_scenario(hc, *c, data, sim_data.window(), sim_data.scenario());
      print_cost_header();
      print_costs(c->name(), r, data.price);
      if (!sim_trace.empty()) {
        std::ofstream f(sim_trace);
        if (!f) throw std::runtime_error(sim_trace + ": cannot write file");
        write_trace(f, r.steps);
      }
    } else if (*cmp) {
      const auto hc = HouseConfig::reference(cmp_data.house);
      const EvParams ev;
      cmp_data.history_days = 1;
      const auto data = cmp_data.data(hc, ev);
      print_cost_header();
      for (const char* name : {"stub", "rbc", "treec", "mpc", "mpc-p"}) {
        if (std::string(name) == "treec" && cmp_trees.empty()) continue;
        auto c = make_controller(name, cmp_trees, data, cmp_data.start_time(), ev, cmp_seed);
        print_costs(c->name(), run_scenario(hc, *c, data, cmp_data.window(), cmp_data.scenario()), data.price);
      }
    } else if (*tr) {
      const auto hc = HouseConfig::reference(tr_data.house);
      const EvParams ev;
      treec::TrainingScenario sc{hc, tr_data.data(hc, ev), tr_data.window(), tr_data.scenario(), {}};
      const auto res = treec::train(sc, tr_cfg, [](int r, int g, double best) {
        if (g % 10 == 0) std::fprintf(stderr, "restart %d generation %d best %.4f\n", r, g, best);
      });
      write_file(tr_out, to_text(res.trees));
      if (!tr_log.empty()) {
        std::ostringstream os;
        treec::write_training_log(os, res);
        write_file(tr_log, os.str());
      }
      if (!tr_dot.empty()) {
        write_file(tr_dot + "_bess.dot", res.trees.bess.to_dot());
        write_file(tr_dot + "_ev.dot", res.trees.ev.to_dot());
      }
      const auto& best = res.restarts[static_cast<std::size_t>(res.best_restart)];
      std::printf("best restart %d: PSO cost %.2f, pruned cost %.2f (%d leaves removed)\n", res.best_restart,
                  best.pso.best_value, res.cost, best.pruned.removed);
      std::printf("%s", to_text(res.trees).c_str());
    } else if (*sch) {
      if (!sch_check.empty()) {
        const auto v = schedule_violations(parse_schedule_csv(read_file(sch_check)));
        for (const auto& m : v) std::printf("%s\n", m.c_str());
        if (!v.empty()) return 1;
        std::printf("schedule valid\n");
      } else {
        const auto csv = schedule_to_csv(generate_schedule(sch_seed));
        if (sch_out.empty())
          std::printf("%s", csv.c_str());
        else
          write_file(sch_out, csv);
      }
    } else if (*exp) {
      const auto cfg = load_config(exp_config);
      const auto log = [&](const std::string& m) {
        if (!exp_quiet) std::fprintf(stderr, "%s\n", m.c_str());
      };
      const auto houses = prepare_houses(cfg, log);
      const auto report = run_experiment(experiment_schedule(cfg), houses, experiment_options(cfg), [&](const DayRecord& d) {
        if (!exp_quiet)
          std::fprintf(stderr, "day %d house %d %-7s %s\n", d.day, d.house, d.ems.c_str(),
                       d.ok ? "ok" : ("failed: " + d.error).c_str());
      });
      if (!exp_out.empty()) write_file(exp_out, render_report(report, ReportFormat::Csv));
      std::printf("%s", render_report(report, exp_format == "csv" ? ReportFormat::Csv : ReportFormat::Text).c_str());
    } else if (*rep) {
      const auto report = parse_report_csv(read_file(rep_in));
      std::printf("%s", render_report(report, rep_format == "csv" ? ReportFormat::Csv : ReportFormat::Text).c_str());
    } else if (*syn) {
      std::filesystem::create_directories(syn_dir);
      const int offset = 60;
      const Timestamp start = parse_iso(syn_start, offset);
      const int train_days = 7;
      const EvParams ev;
      for (int h = 1; h <= kHouseCount; ++h) {
        const auto hc = HouseConfig::reference(h);
        SyntheticOptions so;
        so.start = start - std::chrono::days(train_days);
        so.days = syn_days + train_days;
        so.seed = syn_seed;
        const auto d = synthetic_house_data(hc, ev, so);
        const std::string p = syn_dir + "/house" + std::to_string(h) + "_";
        std::ostringstream load, pv, sessions;
        write_timeseries(load, d.load_kw, SeriesKind::Load, offset);
        write_timeseries(pv, d.pv_kw, SeriesKind::Pv, offset);
        write_sessions(sessions, d.sessions, offset);
        write_file(p + "load.csv", load.str());
        write_file(p + "pv.csv", pv.str());
        write_file(p + "sessions.csv", sessions.str());
        if (h == 1) {
          std::ostringstream price;
          write_timeseries(price, d.price, SeriesKind::Price, offset);
          write_file(syn_dir + "/price.csv", price.str());
        }
      }
      write_file(syn_dir + "/experiment.json", synthetic_config(syn_start, syn_days, syn_seed).dump(2) + "\n");
      std::printf("wrote %s/experiment.json\n", syn_dir.c_str());
    }
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataGapError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failure: %s\n", e.what());
    return 2;
  }
  return 0;
}
