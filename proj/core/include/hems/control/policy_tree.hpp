#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hems/sim/simulator.hpp"

namespace hems {

// Observation features available to tree policies, in genome order.
enum class Feature : int { LoadKw, PvKw, BessSoc, EvSoc, Price, Hour, DayOfWeek, ShiftedPrice };
inline constexpr int kFeatureCount = 8;

std::string_view feature_name(int feature);
int feature_from_name(std::string_view name);  // -1 if unknown
// EV SOC reads as 0 when no EV is connected.
double feature_value(const Observation& obs, int feature);
std::array<double, kFeatureCount> feature_vector(const Observation& obs);

// Binary decision tree; internal nodes send an observation left iff
// feature < threshold, leaves hold an action value in [0, 1]. Node 0 is the root
// and nodes are stored in pre-order.
class PolicyTree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    bool is_leaf() const { return left < 0; }
    bool operator==(const Node&) const = default;
  };

  PolicyTree() : PolicyTree(leaf(0.0)) {}
  static PolicyTree leaf(double value);
  static PolicyTree split(int feature, double threshold, const PolicyTree& left, const PolicyTree& right);

  const std::vector<Node>& nodes() const { return nodes_; }
  int num_leaves() const;
  int depth() const;
  std::vector<int> leaf_indices() const;  // pre-order

  // Index of the leaf reached by the feature vector.
  int leaf_index(const std::array<double, kFeatureCount>& x) const;
  double eval(const Observation& obs) const;

  // Removes `leaf` by replacing its parent with the sibling subtree. Node indices of
  // the result are renumbered.
  PolicyTree collapse_leaf(int leaf) const;
  // Tree with the subtree rooted at `node` spliced in place of it.
  PolicyTree subtree(int node) const;

  void validate() const;

  // "(feature threshold left right)" for internal nodes, the bare value for leaves.
  std::string to_text() const;
  static PolicyTree parse(std::string_view text);
  // Graphviz description.
  std::string to_dot(std::string_view graph_name = "tree") const;

  bool operator==(const PolicyTree&) const = default;

 private:
  explicit PolicyTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}
  void append_subtree(const PolicyTree& other, int node, std::vector<Node>& out) const;

  std::vector<Node> nodes_;
};

double tree_eval(const PolicyTree& tree, const Observation& obs);

// Action value to setpoint. BESS: below 0.1 is self-consumption, otherwise
// (v - 0.1) / 0.9 spans [-max_charge, +max_discharge]. EV: v * p_max.
BessCommand map_bess_action(double value, const HouseConfig& house);
double map_ev_action(double value, const EvParams& ev);
ActionPair tree_action_map(double bess_value, double ev_value, const HouseConfig& house, const EvParams& ev);

struct TreePair {
  PolicyTree bess;
  PolicyTree ev;
  bool operator==(const TreePair&) const = default;
};

// Two lines: "bess <tree>" and "ev <tree>".
std::string to_text(const TreePair& trees);
TreePair parse_tree_pair(std::string_view text);

class TreeController final : public Controller {
 public:
  explicit TreeController(TreePair trees);
  std::string name() const override { return "TreeC"; }
  ActionPair decide(const Observation& obs, const DecisionContext& ctx) override;

  const TreePair& trees() const { return trees_; }
  // Visit counts per node index; the EV tree only counts steps with a connected EV.
  const std::vector<long>& bess_usage() const { return bess_usage_; }
  const std::vector<long>& ev_usage() const { return ev_usage_; }

 private:
  TreePair trees_;
  std::vector<long> bess_usage_;
  std::vector<long> ev_usage_;
};

}  // namespace hems
