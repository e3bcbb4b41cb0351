#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "hems/control/policy_tree.hpp"
#include "hems/sim/simulator.hpp"
#include "hems/tariff/tariff.hpp"

namespace hems::treec {

struct FeatureRange {
  double lo = 0.0;
  double hi = 1.0;
};
using FeatureRanges = std::array<FeatureRange, kFeatureCount>;

// Observed range of every feature over the training window.
FeatureRanges feature_ranges(const ExogenousData& data, TimeWindow window, int switch_hour = 15);

// Genome of two complete trees (BESS, then EV). Per tree: (feature gene, threshold
// gene) for every internal node in breadth-first order, then the leaf values.
struct GenomeLayout {
  int depth = 4;

  int internal_nodes() const { return (1 << depth) - 1; }
  int leaves() const { return 1 << depth; }
  int genes_per_tree() const { return 2 * internal_nodes() + leaves(); }
  int size() const { return 2 * genes_per_tree(); }
};

int feature_from_gene(double gene);
TreePair decode(std::span<const double> genome, const GenomeLayout& layout, const FeatureRanges& ranges);
// Inverse of decode for complete trees of the layout depth.
std::vector<double> encode(const TreePair& trees, const GenomeLayout& layout, const FeatureRanges& ranges);

struct TrainingScenario {
  HouseConfig house;
  ExogenousData data;
  TimeWindow window;
  ScenarioOptions options;
  TariffParams tariff;
};

// Simulated total cost of the tree pair; `usage` receives the controller when given.
double evaluate(const TreePair& trees, const TrainingScenario& scenario, TreeController* usage = nullptr);
double fitness(std::span<const double> genome, const TrainingScenario& scenario, const GenomeLayout& layout,
               const FeatureRanges& ranges);

struct PsoConfig {
  int population = 1000;
  int generations = 1000;
  double inertia = 0.7298;
  double cognitive = 1.49618;
  double social = 1.49618;
  double velocity_clamp = 0.5;  // fraction of each dimension's range
  std::uint64_t seed = 0;

  void validate() const;
};

struct PsoResult {
  std::vector<double> best;
  double best_value = 0.0;
  std::vector<double> history;  // global best after initialization and after each generation
  long evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

// Canonical global-best PSO over the box [lower, upper].
PsoResult pso_optimize(const Objective& f, const std::vector<double>& lower, const std::vector<double>& upper,
                       const PsoConfig& config);
// Same over the unit cube.
PsoResult pso_optimize(const Objective& f, int dimension, const PsoConfig& config);

struct PruneResult {
  TreePair trees;
  double cost = 0.0;
  double unpruned_cost = 0.0;
  int removed = 0;
  int evaluations = 0;
};

// Repeatedly removes the least-used leaf whose removal keeps the cost within
// `threshold` (relative) of the unpruned cost, until no leaf qualifies.
PruneResult prune(const TreePair& trees, const TrainingScenario& scenario, double threshold = 0.01);

struct TrainConfig {
  PsoConfig pso;
  GenomeLayout layout;
  int restarts = 5;
  double prune_threshold = 0.01;
};

struct RestartOutcome {
  std::uint64_t seed = 0;
  PsoResult pso;
  PruneResult pruned;
};

struct TrainResult {
  TreePair trees;
  double cost = 0.0;
  int best_restart = 0;
  FeatureRanges ranges{};
  std::vector<RestartOutcome> restarts;
};

// One PSO run per restart (seeds pso.seed + r), each pruned; keeps the cheapest.
TrainResult train(const TrainingScenario& scenario, const TrainConfig& config,
                  const std::function<void(int restart, int generation, double best)>& progress = {});

// CSV with header "restart,generation,best_cost".
void write_training_log(std::ostream& out, const TrainResult& result);

}  // namespace hems::treec
