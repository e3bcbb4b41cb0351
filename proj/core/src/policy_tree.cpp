#include "hems/control/policy_tree.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace hems {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kFeatureNames{
    "load_kw", "pv_kw", "bess_soc", "ev_soc", "price", "hour", "day_of_week", "shifted_price"};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  void parse_node(std::vector<PolicyTree::Node>& out) {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const int self = static_cast<int>(out.size());
    out.emplace_back();
    if (s_[pos_] != '(') {
      out[static_cast<std::size_t>(self)].value = read_number();
      return;
    }
    ++pos_;
    const std::string_view name = read_token();
    const int feature = feature_from_name(name);
    if (feature < 0) fail("unknown feature '" + std::string(name) + "'");
    const double threshold = read_number();
    out[static_cast<std::size_t>(self)].feature = feature;
    out[static_cast<std::size_t>(self)].threshold = threshold;
    out[static_cast<std::size_t>(self)].left = static_cast<int>(out.size());
    parse_node(out);
    out[static_cast<std::size_t>(self)].right = static_cast<int>(out.size());
    parse_node(out);
    skip_ws();
    if (pos_ >= s_.size() || s_[pos_] != ')') fail("expected ')'");
    ++pos_;
  }

  void finish() {
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters");
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("policy tree parse error at " + std::to_string(pos_) + ": " + msg);
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string_view read_token() {
    skip_ws();
    const std::size_t b = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')')
      ++pos_;
    if (b == pos_) fail("expected token");
    return s_.substr(b, pos_ - b);
  }
  double read_number() {
    const std::string tok(read_token());
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      fail("bad number '" + tok + "'");
    }
    if (used != tok.size()) fail("bad number '" + tok + "'");
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view feature_name(int feature) {
  if (feature < 0 || feature >= kFeatureCount) throw std::out_of_range("feature index");
  return kFeatureNames[static_cast<std::size_t>(feature)];
}

int feature_from_name(std::string_view name) {
  for (int i = 0; i < kFeatureCount; ++i)
    if (kFeatureNames[static_cast<std::size_t>(i)] == name) return i;
  return -1;
}

double feature_value(const Observation& obs, int feature) {
  switch (static_cast<Feature>(feature)) {
    case Feature::LoadKw:
      return obs.load_kw;
    case Feature::PvKw:
      return obs.pv_kw;
    case Feature::BessSoc:
      return obs.bess_soc;
    case Feature::EvSoc:
      return obs.ev_soc.value_or(0.0);
    case Feature::Price:
      return obs.price;
    case Feature::Hour:
      return obs.hour;
    case Feature::DayOfWeek:
      return static_cast<double>(obs.day_of_week);
    case Feature::ShiftedPrice:
      return obs.shifted_price;
  }
  throw std::out_of_range("feature index");
}

std::array<double, kFeatureCount> feature_vector(const Observation& obs) {
  std::array<double, kFeatureCount> x{};
  for (int i = 0; i < kFeatureCount; ++i) x[static_cast<std::size_t>(i)] = feature_value(obs, i);
  return x;
}

PolicyTree PolicyTree::leaf(double value) {
  Node n;
  n.value = value;
  return PolicyTree(std::vector<Node>{n});
}

PolicyTree PolicyTree::split(int feature, double threshold, const PolicyTree& left, const PolicyTree& right) {
  std::vector<Node> out;
  out.reserve(1 + left.nodes_.size() + right.nodes_.size());
  out.push_back(Node{feature, threshold, -1, -1, 0.0});
  out[0].left = 1;
  left.append_subtree(left, 0, out);
  out[0].right = static_cast<int>(out.size());
  right.append_subtree(right, 0, out);
  PolicyTree t(std::move(out));
  t.validate();
  return t;
}

void PolicyTree::append_subtree(const PolicyTree& other, int node, std::vector<Node>& out) const {
  const Node& src = other.nodes_[static_cast<std::size_t>(node)];
  const int self = static_cast<int>(out.size());
  out.push_back(src);
  if (src.is_leaf()) return;
  out[static_cast<std::size_t>(self)].left = static_cast<int>(out.size());
  append_subtree(other, src.left, out);
  out[static_cast<std::size_t>(self)].right = static_cast<int>(out.size());
  append_subtree(other, src.right, out);
}

int PolicyTree::num_leaves() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int PolicyTree::depth() const {
  std::function<int(int)> d = [&](int i) -> int {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    return n.is_leaf() ? 0 : 1 + std::max(d(n.left), d(n.right));
  };
  return d(0);
}

std::vector<int> PolicyTree::leaf_indices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(static_cast<int>(i));
  return out;
}

int PolicyTree::leaf_index(const std::array<double, kFeatureCount>& x) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
  }
  return i;
}

double PolicyTree::eval(const Observation& obs) const {
  return nodes_[static_cast<std::size_t>(leaf_index(feature_vector(obs)))].value;
}

PolicyTree PolicyTree::subtree(int node) const {
  std::vector<Node> out;
  append_subtree(*this, node, out);
  return PolicyTree(std::move(out));
}

PolicyTree PolicyTree::collapse_leaf(int leaf) const {
  if (leaf < 0 || static_cast<std::size_t>(leaf) >= nodes_.size() || !nodes_[static_cast<std::size_t>(leaf)].is_leaf())
    throw std::invalid_argument("collapse_leaf: not a leaf");
  if (nodes_.size() == 1) return *this;
  int parent = -1;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].left == leaf || nodes_[i].right == leaf) parent = static_cast<int>(i);
  const Node& p = nodes_[static_cast<std::size_t>(parent)];
  const int sibling = p.left == leaf ? p.right : p.left;
  std::vector<Node> out;
  std::function<void(int)> copy = [&](int i) {
    if (i == parent) {
      append_subtree(*this, sibling, out);
      return;
    }
    const Node& src = nodes_[static_cast<std::size_t>(i)];
    const int self = static_cast<int>(out.size());
    out.push_back(src);
    if (src.is_leaf()) return;
    out[static_cast<std::size_t>(self)].left = static_cast<int>(out.size());
    copy(src.left);
    out[static_cast<std::size_t>(self)].right = static_cast<int>(out.size());
    copy(src.right);
  };
  copy(0);
  return PolicyTree(std::move(out));
}

void PolicyTree::validate() const {
  if (nodes_.empty()) throw std::invalid_argument("policy tree: no nodes");
  std::vector<int> seen(nodes_.size(), 0);
  std::function<void(int)> walk = [&](int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size()) throw std::invalid_argument("policy tree: bad child");
    if (seen[static_cast<std::size_t>(i)]++) throw std::invalid_argument("policy tree: node reached twice");
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      if (n.right >= 0) throw std::invalid_argument("policy tree: half-open node");
      if (!std::isfinite(n.value)) throw std::invalid_argument("policy tree: non-finite leaf");
      return;
    }
    if (n.feature < 0 || n.feature >= kFeatureCount) throw std::invalid_argument("policy tree: bad feature");
    if (!std::isfinite(n.threshold)) throw std::invalid_argument("policy tree: non-finite threshold");
    walk(n.left);
    walk(n.right);
  };
  walk(0);
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw std::invalid_argument("policy tree: orphan node");
}

std::string PolicyTree::to_text() const {
  std::string out;
  std::function<void(int)> emit = [&](int i) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.is_leaf()) {
      out += number(n.value);
      return;
    }
    out += '(';
    out += feature_name(n.feature);
    out += ' ';
    out += number(n.threshold);
    out += ' ';
    emit(n.left);
    out += ' ';
    emit(n.right);
    out += ')';
  };
  emit(0);
  return out;
}

PolicyTree PolicyTree::parse(std::string_view text) {
  std::vector<Node> nodes;
  Parser p(text);
  p.parse_node(nodes);
  p.finish();
  PolicyTree t(std::move(nodes));
  t.validate();
  return t;
}

std::string PolicyTree::to_dot(std::string_view graph_name) const {
  std::ostringstream os;
  os << "digraph " << graph_name << " {\n  node [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.is_leaf()) {
      os << "  n" << i << " [shape=box, label=\"" << number(n.value) << "\"];\n";
    } else {
      os << "  n" << i << " [shape=ellipse, label=\"" << feature_name(n.feature) << " < " << number(n.threshold)
         << "\"];\n";
      os << "  n" << i << " -> n" << n.left << " [label=\"yes\"];\n";
      os << "  n" << i << " -> n" << n.right << " [label=\"no\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

double tree_eval(const PolicyTree& tree, const Observation& obs) { return tree.eval(obs); }

BessCommand map_bess_action(double value, const HouseConfig& house) {
  const double v = std::clamp(value, 0.0, 1.0);
  if (v < 0.1) return BessCommand::self_consumption();
  const double span = house.bess_max_charge_kw + house.bess_max_discharge_kw;
  return BessCommand::power(-house.bess_max_charge_kw + (v - 0.1) / 0.9 * span);
}

double map_ev_action(double value, const EvParams& ev) { return std::clamp(value, 0.0, 1.0) * ev.p_max_kw; }

ActionPair tree_action_map(double bess_value, double ev_value, const HouseConfig& house, const EvParams& ev) {
  return ActionPair{map_bess_action(bess_value, house), map_ev_action(ev_value, ev)};
}

std::string to_text(const TreePair& trees) {
  return "bess " + trees.bess.to_text() + "\nev " + trees.ev.to_text() + "\n";
}

TreePair parse_tree_pair(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::optional<PolicyTree> bess, ev;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto sp = line.find_first_of(" \t", b);
    const std::string key = line.substr(b, sp == std::string::npos ? std::string::npos : sp - b);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp);
    if (key == "bess") {
      bess = PolicyTree::parse(rest);
    } else if (key == "ev") {
      ev = PolicyTree::parse(rest);
    } else {
      throw std::invalid_argument("tree pair: unknown key '" + key + "'");
    }
  }
  if (!bess || !ev) throw std::invalid_argument("tree pair: need both 'bess' and 'ev' lines");
  return TreePair{*bess, *ev};
}

TreeController::TreeController(TreePair trees)
    : trees_(std::move(trees)),
      bess_usage_(trees_.bess.nodes().size(), 0),
      ev_usage_(trees_.ev.nodes().size(), 0) {
  trees_.bess.validate();
  trees_.ev.validate();
}

ActionPair TreeController::decide(const Observation& obs, const DecisionContext& ctx) {
  const auto x = feature_vector(obs);
  const int bl = trees_.bess.leaf_index(x);
  ++bess_usage_[static_cast<std::size_t>(bl)];
  double ev_value = 0.0;
  if (obs.session) {
    const int el = trees_.ev.leaf_index(x);
    ++ev_usage_[static_cast<std::size_t>(el)];
    ev_value = trees_.ev.nodes()[static_cast<std::size_t>(el)].value;
  }
  return tree_action_map(trees_.bess.nodes()[static_cast<std::size_t>(bl)].value, ev_value, ctx.house, ctx.ev);
}

}  // namespace hems
