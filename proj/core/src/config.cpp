#include "hems/harness/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hems/harness/synthetic.hpp"
#include "hems/treec/treec.hpp"
#include "json.hpp"

namespace hems {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& ctx) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError("config: " + ctx + key + " has the wrong type");
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& ctx) {
  if (!j.is_object()) throw InputError("config: " + ctx + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InputError("config: unknown key " + ctx + k);
  }
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(base) / path).string();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError(path + ": cannot open file");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  check_keys(j,
             {"offset_minutes", "start", "days", "schedule_seed", "schedule", "price", "simulation", "tariff",
              "mpc_perfect_reference", "stub_seed", "knn_neighbours", "initial_bess_soc", "treec", "synthetic",
              "houses"},
             "");
  ExperimentConfig c;
  c.base_dir = base_dir;
  read(j, "offset_minutes", c.offset_minutes, "");
  std::string start;
  read(j, "start", start, "");
  if (start.empty()) throw InputError("config: start is required");
  try {
    c.start = parse_iso(start, c.offset_minutes);
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: start: ") + e.what());
  }
  read(j, "days", c.days, "");
  if (c.days < 1) throw InputError("config: days must be positive");
  read(j, "schedule_seed", c.schedule_seed, "");
  read(j, "schedule", c.schedule, "");
  c.schedule = resolve(base_dir, c.schedule);
  read(j, "price", c.price, "");
  c.price = resolve(base_dir, c.price);
  read(j, "mpc_perfect_reference", c.mpc_perfect_reference, "");
  read(j, "stub_seed", c.stub_seed, "");
  read(j, "knn_neighbours", c.knn_neighbours, "");
  read(j, "initial_bess_soc", c.initial_bess_soc, "");
  if (!(c.initial_bess_soc >= 0.0 && c.initial_bess_soc <= 1.0))
    throw InputError("config: initial_bess_soc must be in [0,1]");

  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    check_keys(s, {"safety", "grid_limit", "fallback_threshold_w2", "inner_dt_seconds", "enforced_charging",
                   "switch_hour"},
               "simulation.");
    read(s, "safety", c.scenario.safety, "simulation.");
    std::string mode = "active";
    read(s, "grid_limit", mode, "simulation.");
    if (mode == "active")
      c.scenario.mode = GridLimitMode::ActivePower;
    else if (mode == "apparent")
      c.scenario.mode = GridLimitMode::ApparentPower;
    else
      throw InputError("config: simulation.grid_limit must be 'active' or 'apparent'");
    read(s, "fallback_threshold_w2", c.scenario.fallback_threshold, "simulation.");
    long inner = c.scenario.inner_dt.count();
    read(s, "inner_dt_seconds", inner, "simulation.");
    c.scenario.inner_dt = Seconds(inner);
    read(s, "enforced_charging", c.scenario.enforced_charging, "simulation.");
    read(s, "switch_hour", c.scenario.switch_hour, "simulation.");
  }
  if (j.contains("tariff")) {
    const auto& t = j["tariff"];
    check_keys(t, {"injection_adder", "offtake_subtractor", "vat", "offtake_extras", "peak_price", "peak_floor_kw",
                   "yearly"},
               "tariff.");
    read(t, "injection_adder", c.tariff.injection_adder, "tariff.");
    read(t, "offtake_subtractor", c.tariff.offtake_subtractor, "tariff.");
    read(t, "vat", c.tariff.vat, "tariff.");
    read(t, "offtake_extras", c.tariff.offtake_extras, "tariff.");
    read(t, "peak_price", c.tariff.peak_price, "tariff.");
    read(t, "peak_floor_kw", c.tariff.peak_floor_kw, "tariff.");
    read(t, "yearly", c.tariff.yearly, "tariff.");
    try {
      c.tariff.validate();
    } catch (const std::exception& e) {
      throw InputError(std::string("config: tariff: ") + e.what());
    }
  }
  if (j.contains("treec")) {
    const auto& t = j["treec"];
    check_keys(t, {"days", "population", "generations", "restarts", "seed"}, "treec.");
    read(t, "days", c.treec.days, "treec.");
    read(t, "population", c.treec.population, "treec.");
    read(t, "generations", c.treec.generations, "treec.");
    read(t, "restarts", c.treec.restarts, "treec.");
    read(t, "seed", c.treec.seed, "treec.");
    if (c.treec.days < 1 || c.treec.population < 2 || c.treec.generations < 0 || c.treec.restarts < 1)
      throw InputError("config: treec settings out of range");
  }
  if (j.contains("synthetic")) {
    check_keys(j["synthetic"], {"seed"}, "synthetic.");
    SyntheticConfig s;
    read(j["synthetic"], "seed", s.seed, "synthetic.");
    c.synthetic = s;
  }

  if (!j.contains("houses") || !j["houses"].is_array() || j["houses"].size() != static_cast<std::size_t>(kHouseCount))
    throw InputError("config: houses must list 4 houses");
  for (std::size_t i = 0; i < j["houses"].size(); ++i) {
    const auto& h = j["houses"][i];
    const std::string ctx = "houses[" + std::to_string(i) + "].";
    check_keys(h, {"id", "load", "pv", "reactive", "sessions", "trees", "shift_days", "assets"}, ctx);
    int id = static_cast<int>(i) + 1;
    read(h, "id", id, ctx);
    if (id != static_cast<int>(i) + 1) throw InputError("config: houses must be listed in order 1..4");
    HouseSource src;
    src.house = HouseConfig::reference(id);
    read(h, "load", src.load, ctx);
    read(h, "pv", src.pv, ctx);
    read(h, "reactive", src.reactive, ctx);
    read(h, "sessions", src.sessions, ctx);
    read(h, "trees", src.trees, ctx);
    read(h, "shift_days", src.shift_days, ctx);
    for (auto* p : {&src.load, &src.pv, &src.reactive, &src.sessions, &src.trees}) *p = resolve(base_dir, *p);
    if (h.contains("assets")) {
      const auto& a = h["assets"];
      const std::string actx = ctx + "assets.";
      check_keys(a, {"bess_capacity_kwh", "bess_max_charge_kw", "bess_max_discharge_kw", "bess_efficiency",
                     "pv_peak_kw", "grid_limit_active_kw", "grid_limit_apparent_kva", "mpc_grid_limit_kw",
                     "bess_soc_cap"},
                 actx);
      auto& hc = src.house;
      read(a, "bess_capacity_kwh", hc.bess_capacity_kwh, actx);
      read(a, "bess_max_charge_kw", hc.bess_max_charge_kw, actx);
      read(a, "bess_max_discharge_kw", hc.bess_max_discharge_kw, actx);
      read(a, "bess_efficiency", hc.bess_efficiency, actx);
      read(a, "pv_peak_kw", hc.pv_peak_kw, actx);
      read(a, "grid_limit_active_kw", hc.grid_limit_active_kw, actx);
      read(a, "grid_limit_apparent_kva", hc.grid_limit_apparent_kva, actx);
      read(a, "mpc_grid_limit_kw", hc.mpc_grid_limit_kw, actx);
      read(a, "bess_soc_cap", hc.bess_soc_cap, actx);
    }
    try {
      src.house.validate();
    } catch (const std::exception& e) {
      throw InputError("config: " + ctx + e.what());
    }
    if (!c.synthetic && (src.load.empty() || src.pv.empty()))
      throw InputError("config: " + ctx + "load and pv are required without synthetic data");
    c.houses.push_back(src);
  }
  if (!c.synthetic && c.price.empty()) throw InputError("config: price is required without synthetic data");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_config(slurp(path), base.empty() ? "." : base);
}

ExperimentOptions experiment_options(const ExperimentConfig& c) {
  ExperimentOptions o;
  o.start = c.start;
  o.scenario = c.scenario;
  o.tariff = c.tariff;
  o.mpc.tariff = c.tariff;
  o.mpc_perfect_reference = c.mpc_perfect_reference;
  o.stub_seed = c.stub_seed;
  o.knn_neighbours = c.knn_neighbours;
  o.initial_bess_soc = c.initial_bess_soc;
  return o;
}

Schedule experiment_schedule(const ExperimentConfig& c) {
  Schedule s = c.schedule.empty() ? generate_schedule(c.schedule_seed) : parse_schedule_csv(slurp(c.schedule));
  if (static_cast<int>(s.days.size()) < c.days)
    throw InputError("config: schedule has fewer days than the experiment");
  s.days.resize(static_cast<std::size_t>(c.days));
  return s;
}

std::vector<ExperimentHouse> prepare_houses(const ExperimentConfig& c,
                                            const std::function<void(const std::string&)>& log) {
  std::vector<ExperimentHouse> out;
  const Timestamp train_from = c.start - std::chrono::days(c.treec.days);
  std::optional<TimeSeries> shared_price;
  if (!c.synthetic) shared_price = load_timeseries(c.price, SeriesKind::Price, {c.offset_minutes, 0});

  for (const auto& src : c.houses) {
    ExperimentHouse h;
    h.house = src.house;
    if (c.synthetic) {
      SyntheticOptions so;
      so.start = train_from;
      so.days = c.treec.days + c.days;
      so.seed = c.synthetic->seed;
      so.switch_hour = c.scenario.switch_hour;
      h.data = synthetic_house_data(h.house, c.scenario.ev, so);
    } else {
      const LoadOptions lo{c.offset_minutes, src.shift_days};
      h.data.load_kw = load_timeseries(src.load, SeriesKind::Load, lo);
      h.data.pv_kw = load_timeseries(src.pv, SeriesKind::Pv, lo);
      if (!src.reactive.empty()) h.data.reactive_kvar = load_timeseries(src.reactive, SeriesKind::Reactive, lo);
      h.data.price = *shared_price;
      if (!src.sessions.empty()) {
        auto adj = adjust_sessions(load_sessions(src.sessions, lo), c.scenario.switch_hour);
        for (const auto& d : adj.dropped)
          if (log) log("house " + std::to_string(h.house.house_id) + ": dropped session at " + format_iso(d.arrival));
        h.data.sessions = std::move(adj.sessions);
      }
    }
    if (!src.trees.empty()) {
      h.trees = parse_tree_pair(slurp(src.trees));
    } else {
      if (log) log("house " + std::to_string(h.house.house_id) + ": training TreeC policy");
      treec::TrainingScenario sc{h.house, h.data, {train_from, c.start}, c.scenario, c.tariff};
      treec::TrainConfig tc;
      tc.pso.population = c.treec.population;
      tc.pso.generations = c.treec.generations;
      tc.pso.seed = c.treec.seed + static_cast<std::uint64_t>(h.house.house_id);
      tc.restarts = c.treec.restarts;
      h.trees = treec::train(sc, tc).trees;
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace hems
