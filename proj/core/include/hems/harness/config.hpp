#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hems/harness/experiment.hpp"
#include "hems/harness/io.hpp"
#include "hems/harness/schedule.hpp"

namespace hems {

struct HouseSource {
  HouseConfig house;
  std::string load;      // CSV paths, relative to the config file
  std::string pv;
  std::string reactive;  // optional
  std::string sessions;  // optional
  std::string trees;     // optional TreeC policy; trained when empty
  int shift_days = 0;
};

struct TreecTrainingConfig {
  int days = 7;  // training window right before the experiment
  int population = 50;
  int generations = 100;
  int restarts = 1;
  std::uint64_t seed = 0;
};

struct SyntheticConfig {
  std::uint64_t seed = 0;
};

// Experiment description read from a JSON file; see README for the schema.
struct ExperimentConfig {
  std::string base_dir;
  int offset_minutes = 60;
  Timestamp start{};
  int days = kScheduleDays;
  std::uint64_t schedule_seed = 0;
  std::string schedule;  // optional schedule CSV; generated when empty
  std::string price;
  ScenarioOptions scenario;
  TariffParams tariff;
  bool mpc_perfect_reference = true;
  std::uint64_t stub_seed = 0;
  int knn_neighbours = 5;
  double initial_bess_soc = 1.0;
  TreecTrainingConfig treec;
  std::optional<SyntheticConfig> synthetic;
  std::vector<HouseSource> houses;
};

// Throws InputError on schema violations.
ExperimentConfig parse_config(std::string_view json_text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

ExperimentOptions experiment_options(const ExperimentConfig& config);
Schedule experiment_schedule(const ExperimentConfig& config);

// Loads (or synthesizes) the data of every house, adjusts sessions to the switch
// time and trains TreeC policies that are not given as files.
std::vector<ExperimentHouse> prepare_houses(const ExperimentConfig& config,
                                            const std::function<void(const std::string&)>& log = {});

}  // namespace hems
