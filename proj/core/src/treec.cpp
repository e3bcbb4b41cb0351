#include "hems/treec/treec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace hems::treec {

FeatureRanges feature_ranges(const ExogenousData& data, TimeWindow window, int switch_hour) {
  FeatureRanges r;
  const auto span_of = [&](const TimeSeries& s) {
    FeatureRange fr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (Timestamp t = window.from; t < window.to; t += kEmsStep) {
      if (auto v = s.try_at(t)) {
        fr.lo = std::min(fr.lo, *v);
        fr.hi = std::max(fr.hi, *v);
      }
    }
    if (!std::isfinite(fr.lo)) fr = FeatureRange{0.0, 1.0};
    return fr;
  };
  r[static_cast<std::size_t>(Feature::LoadKw)] = span_of(data.load_kw);
  r[static_cast<std::size_t>(Feature::PvKw)] = span_of(data.pv_kw);
  r[static_cast<std::size_t>(Feature::BessSoc)] = {0.0, 1.0};
  r[static_cast<std::size_t>(Feature::EvSoc)] = {0.0, 1.0};
  r[static_cast<std::size_t>(Feature::Price)] = span_of(data.price);
  r[static_cast<std::size_t>(Feature::Hour)] = {0.0, 24.0};
  r[static_cast<std::size_t>(Feature::DayOfWeek)] = {0.0, 7.0};
  double shifted = 0.0;
  for (Timestamp t = window.from; t < window.to; t += kEmsStep) {
    if (auto v = data.price.try_at(t)) shifted = std::max(shifted, *v - day_min_price(data.price, t, switch_hour));
  }
  r[static_cast<std::size_t>(Feature::ShiftedPrice)] = {0.0, shifted};
  return r;
}

int feature_from_gene(double gene) {
  const int f = static_cast<int>(std::floor(std::clamp(gene, 0.0, 1.0) * kFeatureCount));
  return std::min(f, kFeatureCount - 1);
}

namespace {

PolicyTree decode_tree(std::span<const double> g, const GenomeLayout& layout, const FeatureRanges& ranges) {
  const int internal = layout.internal_nodes();
  std::vector<PolicyTree> level;
  level.reserve(static_cast<std::size_t>(layout.leaves()));
  for (int i = 0; i < layout.leaves(); ++i)
    level.push_back(PolicyTree::leaf(std::clamp(g[static_cast<std::size_t>(2 * internal + i)], 0.0, 1.0)));
  // Build bottom-up; heap node k has children 2k+1 and 2k+2.
  for (int first = internal - (1 << (layout.depth - 1)); first >= 0 && !level.empty(); first = (first - 1) / 2) {
    const int count = static_cast<int>(level.size()) / 2;
    std::vector<PolicyTree> up;
    up.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int k = first + i;
      const int f = feature_from_gene(g[static_cast<std::size_t>(2 * k)]);
      const auto& fr = ranges[static_cast<std::size_t>(f)];
      const double thr = fr.lo + std::clamp(g[static_cast<std::size_t>(2 * k + 1)], 0.0, 1.0) * (fr.hi - fr.lo);
      up.push_back(PolicyTree::split(f, thr, level[static_cast<std::size_t>(2 * i)],
                                     level[static_cast<std::size_t>(2 * i + 1)]));
    }
    level = std::move(up);
    if (first == 0) break;
  }
  return level.front();
}

void encode_tree(const PolicyTree& tree, const GenomeLayout& layout, const FeatureRanges& ranges,
                 std::span<double> g) {
  const int internal = layout.internal_nodes();
  // Walk breadth-first, mapping heap position to node index.
  std::vector<int> heap{0};
  for (std::size_t k = 0; k < heap.size(); ++k) {
    const auto& n = tree.nodes()[static_cast<std::size_t>(heap[k])];
    const int pos = static_cast<int>(k);
    if (pos < internal) {
      if (n.is_leaf()) throw std::invalid_argument("encode: tree is not complete at the layout depth");
      const auto& fr = ranges[static_cast<std::size_t>(n.feature)];
      g[static_cast<std::size_t>(2 * pos)] = (n.feature + 0.5) / kFeatureCount;
      g[static_cast<std::size_t>(2 * pos + 1)] =
          fr.hi > fr.lo ? std::clamp((n.threshold - fr.lo) / (fr.hi - fr.lo), 0.0, 1.0) : 0.5;
      heap.push_back(n.left);
      heap.push_back(n.right);
    } else {
      if (!n.is_leaf()) throw std::invalid_argument("encode: tree deeper than the layout");
      g[static_cast<std::size_t>(2 * internal + pos - internal)] = n.value;
    }
  }
}

}  // namespace

TreePair decode(std::span<const double> genome, const GenomeLayout& layout, const FeatureRanges& ranges) {
  if (layout.depth < 0) throw std::invalid_argument("negative tree depth");
  if (static_cast<int>(genome.size()) != layout.size())
    throw std::invalid_argument("genome has " + std::to_string(genome.size()) + " genes, layout needs " +
                                std::to_string(layout.size()));
  const auto per = static_cast<std::size_t>(layout.genes_per_tree());
  return TreePair{decode_tree(genome.subspan(0, per), layout, ranges), decode_tree(genome.subspan(per, per), layout, ranges)};
}

std::vector<double> encode(const TreePair& trees, const GenomeLayout& layout, const FeatureRanges& ranges) {
  std::vector<double> g(static_cast<std::size_t>(layout.size()), 0.0);
  const auto per = static_cast<std::size_t>(layout.genes_per_tree());
  encode_tree(trees.bess, layout, ranges, std::span<double>(g).subspan(0, per));
  encode_tree(trees.ev, layout, ranges, std::span<double>(g).subspan(per, per));
  return g;
}

double evaluate(const TreePair& trees, const TrainingScenario& scenario, TreeController* usage) {
  TreeController local(trees);
  TreeController& c = usage ? *usage : local;
  if (usage && !(usage->trees() == trees)) throw std::invalid_argument("evaluate: controller holds other trees");
  const auto r = run_scenario(scenario.house, c, scenario.data, scenario.window, scenario.options);
  return total_cost(std::span<const StepTrace>(r.steps), scenario.data.price, scenario.tariff).total;
}

double fitness(std::span<const double> genome, const TrainingScenario& scenario, const GenomeLayout& layout,
               const FeatureRanges& ranges) {
  return evaluate(decode(genome, layout, ranges), scenario);
}

void PsoConfig::validate() const {
  if (population < 2) throw std::invalid_argument("PSO population must be at least 2");
  if (generations < 0) throw std::invalid_argument("PSO generations must be non-negative");
  if (!(inertia > 0.0) || !(cognitive > 0.0) || !(social > 0.0) || !(velocity_clamp > 0.0))
    throw std::invalid_argument("PSO coefficients must be positive");
}

PsoResult pso_optimize(const Objective& f, const std::vector<double>& lower, const std::vector<double>& upper,
                       const PsoConfig& config) {
  config.validate();
  if (lower.size() != upper.size()) throw std::invalid_argument("PSO bounds differ in size");
  const std::size_t d = lower.size();
  for (std::size_t j = 0; j < d; ++j)
    if (!(lower[j] <= upper[j])) throw std::invalid_argument("PSO bounds inverted");
  const auto np = static_cast<std::size_t>(config.population);

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> vmax(d);
  for (std::size_t j = 0; j < d; ++j) vmax[j] = config.velocity_clamp * (upper[j] - lower[j]);

  std::vector<std::vector<double>> x(np, std::vector<double>(d)), v(np, std::vector<double>(d));
  for (std::size_t i = 0; i < np; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      x[i][j] = lower[j] + unit(rng) * (upper[j] - lower[j]);
      v[i][j] = (2.0 * unit(rng) - 1.0) * vmax[j];
    }
  }

  PsoResult res;
  std::vector<std::vector<double>> pbest = x;
  std::vector<double> pval(np);
  std::size_t g = 0;
  for (std::size_t i = 0; i < np; ++i) {
    pval[i] = f(x[i]);
    ++res.evaluations;
    if (pval[i] < pval[g]) g = i;
  }
  res.best = pbest[g];
  res.best_value = pval[g];
  res.history.push_back(res.best_value);

  for (int gen = 0; gen < config.generations; ++gen) {
    for (std::size_t i = 0; i < np; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double vel = config.inertia * v[i][j] + config.cognitive * r1 * (pbest[i][j] - x[i][j]) +
                     config.social * r2 * (res.best[j] - x[i][j]);
        vel = std::clamp(vel, -vmax[j], vmax[j]);
        double pos = x[i][j] + vel;
        if (pos < lower[j]) {
          pos = lower[j];
          vel = 0.0;
        } else if (pos > upper[j]) {
          pos = upper[j];
          vel = 0.0;
        }
        v[i][j] = vel;
        x[i][j] = pos;
      }
    }
    for (std::size_t i = 0; i < np; ++i) {
      const double val = f(x[i]);
      ++res.evaluations;
      if (val < pval[i]) {
        pval[i] = val;
        pbest[i] = x[i];
      }
    }
    for (std::size_t i = 0; i < np; ++i) {
      if (pval[i] < res.best_value) {
        res.best_value = pval[i];
        res.best = pbest[i];
      }
    }
    res.history.push_back(res.best_value);
  }
  return res;
}

PsoResult pso_optimize(const Objective& f, int dimension, const PsoConfig& config) {
  if (dimension < 1) throw std::invalid_argument("PSO dimension must be positive");
  return pso_optimize(f, std::vector<double>(static_cast<std::size_t>(dimension), 0.0),
                      std::vector<double>(static_cast<std::size_t>(dimension), 1.0), config);
}

PruneResult prune(const TreePair& trees, const TrainingScenario& scenario, double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("prune threshold must be non-negative");
  PruneResult res;
  res.trees = trees;
  res.unpruned_cost = evaluate(trees, scenario);
  res.cost = res.unpruned_cost;
  res.evaluations = 1;
  const double limit = res.unpruned_cost + threshold * std::abs(res.unpruned_cost);

  struct Candidate {
    long usage;
    int tree;  // 0 = BESS, 1 = EV
    int leaf;
  };
  while (true) {
    TreeController probe(res.trees);
    const double current = evaluate(res.trees, scenario, &probe);
    ++res.evaluations;
    std::vector<Candidate> cands;
    for (int which = 0; which < 2; ++which) {
      const PolicyTree& t = which == 0 ? res.trees.bess : res.trees.ev;
      if (t.nodes().size() == 1) continue;
      const auto& usage = which == 0 ? probe.bess_usage() : probe.ev_usage();
      for (int leaf : t.leaf_indices()) cands.push_back(Candidate{usage[static_cast<std::size_t>(leaf)], which, leaf});
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.usage < b.usage; });
    bool accepted = false;
    for (const auto& c : cands) {
      TreePair next = res.trees;
      PolicyTree& t = c.tree == 0 ? next.bess : next.ev;
      t = t.collapse_leaf(c.leaf);
      // An unvisited leaf does not influence the simulation.
      double cost = current;
      if (c.usage > 0) {
        cost = evaluate(next, scenario);
        ++res.evaluations;
      }
      if (cost <= limit) {
        res.trees = std::move(next);
        res.cost = cost;
        ++res.removed;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return res;
}

TrainResult train(const TrainingScenario& scenario, const TrainConfig& config,
                  const std::function<void(int, int, double)>& progress) {
  if (config.restarts < 1) throw std::invalid_argument("training needs at least one restart");
  TrainResult out;
  out.ranges = feature_ranges(scenario.data, scenario.window, scenario.options.switch_hour);
  const auto ranges = out.ranges;
  const Objective f = [&](std::span<const double> g) { return fitness(g, scenario, config.layout, ranges); };
  for (int r = 0; r < config.restarts; ++r) {
    RestartOutcome o;
    PsoConfig pc = config.pso;
    pc.seed = config.pso.seed + static_cast<std::uint64_t>(r);
    o.seed = pc.seed;
    o.pso = pso_optimize(f, config.layout.size(), pc);
    if (progress) {
      for (std::size_t gen = 0; gen < o.pso.history.size(); ++gen) progress(r, static_cast<int>(gen), o.pso.history[gen]);
    }
    o.pruned = prune(decode(o.pso.best, config.layout, ranges), scenario, config.prune_threshold);
    if (r == 0 || o.pruned.cost < out.cost) {
      out.cost = o.pruned.cost;
      out.trees = o.pruned.trees;
      out.best_restart = r;
    }
    out.restarts.push_back(std::move(o));
  }
  return out;
}

void write_training_log(std::ostream& out, const TrainResult& result) {
  out << "restart,generation,best_cost\n";
  char buf[64];
  for (std::size_t r = 0; r < result.restarts.size(); ++r) {
    const auto& h = result.restarts[r].pso.history;
    for (std::size_t g = 0; g < h.size(); ++g) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f\n", r, g, h[g]);
      out << buf;
    }
  }
}

}  // namespace hems::treec
