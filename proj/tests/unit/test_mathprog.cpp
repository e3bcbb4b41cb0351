#include <doctest.h>

#include <cmath>
#include <random>

#include "hems/mathprog/linear_program.hpp"

using namespace hems::mathprog;

namespace {

// Minimum over the vertices of {lower <= x <= upper, row bounds}: every choice of n
// active constraints that yields a unique feasible point. Requires finite bounds.
struct VertexResult {
  bool feasible = false;
  double objective = kInfinity;
};

bool solve_square(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-10) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.resize(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return true;
}

VertexResult vertex_enumeration(const LinearProgram& lp) {
  const auto n = static_cast<std::size_t>(lp.num_variables());
  // Candidate hyperplanes: (coefficients, rhs).
  std::vector<std::pair<std::vector<double>, double>> planes;
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    planes.emplace_back(e, lp.variables()[j].lower);
    planes.emplace_back(e, lp.variables()[j].upper);
  }
  for (const auto& r : lp.rows()) {
    std::vector<double> a(n, 0.0);
    for (const auto& t : r.terms) a[static_cast<std::size_t>(t.var)] += t.coef;
    if (std::isfinite(r.lower)) planes.emplace_back(a, r.lower);
    if (std::isfinite(r.upper) && r.upper != r.lower) planes.emplace_back(a, r.upper);
  }
  VertexResult best;
  std::vector<std::size_t> pick(n);
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  std::vector<double> x;
  while (true) {
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    for (auto i : pick) {
      a.push_back(planes[i].first);
      b.push_back(planes[i].second);
    }
    if (solve_square(a, b, x) && lp.max_violation(x) <= 1e-8) {
      best.feasible = true;
      best.objective = std::min(best.objective, lp.objective(x));
    }
    // next combination
    std::size_t k = n;
    while (k > 0 && pick[k - 1] == planes.size() - n + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t i = k; i < n; ++i) pick[i] = pick[i - 1] + 1;
  }
  return best;
}

LinearProgram random_lp(std::mt19937_64& rng, int n, int m, int binaries = 0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LinearProgram lp;
  for (int j = 0; j < n; ++j) {
    if (j < binaries) {
      lp.add_binary("b" + std::to_string(j), 3 * u(rng));
    } else {
      const double lo = 2 * u(rng);
      lp.add_variable("x" + std::to_string(j), lo, lo + 1 + 3 * (u(rng) + 1), 3 * u(rng));
    }
  }
  for (int i = 0; i < m; ++i) {
    std::vector<Term> t;
    for (int j = 0; j < n; ++j) t.push_back({j, std::round(4 * u(rng)) / 2});
    const double rhs = 2 * u(rng);
    const int kind = static_cast<int>((u(rng) + 1) * 1.5);
    lp.add_row("r" + std::to_string(i), t,
               kind == 0 ? RowSense::LessEqual : kind == 1 ? RowSense::GreaterEqual : RowSense::Equal, rhs);
  }
  return lp;
}

}  // namespace

TEST_CASE("solve_lp: single bounded variable") {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0, 10, 1.0);
  lp.add_row("lb", {{x, 1.0}}, RowSense::GreaterEqual, 3.0);
  const auto s = solve_lp(lp);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.values[0] == doctest::Approx(3.0));
  CHECK(s.objective == doctest::Approx(3.0));
}

TEST_CASE("solve_lp: infeasible pair") {
  LinearProgram lp;
  const int x = lp.add_variable("x", -kInfinity, kInfinity);
  lp.add_row("a", {{x, 1.0}}, RowSense::LessEqual, 1.0);
  lp.add_row("b", {{x, 1.0}}, RowSense::GreaterEqual, 2.0);
  CHECK(solve_lp(lp).status == SolveStatus::Infeasible);
  CHECK(solve_milp(lp).status == SolveStatus::Infeasible);
}

TEST_CASE("solve_lp: unbounded") {
  LinearProgram lp;
  lp.add_variable("x", 0, kInfinity, -1.0);
  CHECK(solve_lp(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("solve_lp: iteration limit") {
  std::mt19937_64 rng(1);
  auto lp = random_lp(rng, 6, 4);
  SolverOptions o;
  o.max_iterations = 0;
  CHECK(solve_lp(lp, o).status == SolveStatus::IterationLimit);
}

TEST_CASE("solve_lp matches vertex enumeration on random 5-variable programs") {
  std::mt19937_64 rng(2024);
  int feasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto lp = random_lp(rng, 5, 3);
    const auto oracle = vertex_enumeration(lp);
    const auto s = solve_lp(lp);
    INFO("trial ", trial, "\n", lp.to_lp_text());
    if (!oracle.feasible) {
      CHECK(s.status == SolveStatus::Infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(s.objective == doctest::Approx(oracle.objective).epsilon(1e-6).scale(1.0));
    CHECK(std::abs(s.objective - oracle.objective) <= 1e-6);
    CHECK(lp.max_violation(s.values) <= 1e-6);
  }
  CHECK(feasible > 50);
}

TEST_CASE("solve_milp: knapsack matches enumeration") {
  const double value[] = {6, 10, 12}, weight[] = {1, 2, 3};
  LinearProgram lp;
  std::vector<Term> cap;
  for (int i = 0; i < 3; ++i) cap.push_back({lp.add_binary("x" + std::to_string(i), -value[i]), weight[i]});
  lp.add_row("capacity", cap, RowSense::LessEqual, 5.0);
  double best = 0.0;
  for (int mask = 0; mask < 8; ++mask) {
    double v = 0, w = 0;
    for (int i = 0; i < 3; ++i)
      if (mask & (1 << i)) v += value[i], w += weight[i];
    if (w <= 5) best = std::min(best, -v);
  }
  const auto s = solve_milp(lp);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.objective == doctest::Approx(best));
  CHECK(s.objective == doctest::Approx(-22.0));
  for (double v : s.values) CHECK((v == 0.0 || v == 1.0));
  CHECK(solve_lp(lp).objective <= s.objective + 1e-9);
}

TEST_CASE("solve_milp: integral relaxation needs a single node") {
  LinearProgram lp;
  const int b = lp.add_binary("b", 1.0);
  const int x = lp.add_variable("x", 0, 4, -1.0);
  lp.add_row("link", {{x, 1.0}, {b, -4.0}}, RowSense::LessEqual, 0.0);
  lp.add_row("one", {{b, 1.0}}, RowSense::GreaterEqual, 1.0);
  const auto s = solve_milp(lp);
  REQUIRE(s.status == SolveStatus::Optimal);
  CHECK(s.nodes == 1);
  CHECK(s.objective == doctest::Approx(-3.0));
  CHECK(s.gap == 0.0);
}

TEST_CASE("solve_milp matches enumeration over binaries on random programs") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto lp = random_lp(rng, 5, 3, 3);
    double best = kInfinity;
    for (int mask = 0; mask < 8; ++mask) {
      LinearProgram fixed = lp;
      for (int j = 0; j < 3; ++j) fixed.set_bounds(j, (mask >> j) & 1, (mask >> j) & 1);
      const auto v = vertex_enumeration(fixed);
      if (v.feasible) best = std::min(best, v.objective);
    }
    const auto s = solve_milp(lp);
    INFO("trial ", trial);
    if (!std::isfinite(best)) {
      CHECK(s.status == SolveStatus::Infeasible);
      continue;
    }
    REQUIRE(s.status == SolveStatus::Optimal);
    CHECK(std::abs(s.objective - best) <= 1e-6 * std::max(1.0, std::abs(best)));
    CHECK(lp.max_violation(s.values) <= 1e-6);
    for (int j = 0; j < 3; ++j) {
      const double v = s.values[static_cast<std::size_t>(j)];
      CHECK(std::abs(v - std::round(v)) <= 1e-6);
    }
  }
}

TEST_CASE("solve_milp: node limit reports the incumbent") {
  std::mt19937_64 rng(5);
  LinearProgram lp;
  std::uniform_real_distribution<double> u(1.0, 10.0);
  std::vector<Term> cap;
  for (int i = 0; i < 16; ++i) cap.push_back({lp.add_binary("x" + std::to_string(i), -u(rng)), u(rng)});
  lp.add_row("capacity", cap, RowSense::LessEqual, 20.0);
  SolverOptions o;
  o.max_nodes = 2;
  const auto s = solve_milp(lp, o);
  CHECK(s.nodes <= 2);
  if (s.status == SolveStatus::IterationLimit && std::isfinite(s.objective)) CHECK(s.gap > 0.0);
  const auto full = solve_milp(lp);
  REQUIRE(full.status == SolveStatus::Optimal);
  if (std::isfinite(s.objective)) CHECK(s.objective >= full.objective - 1e-9);
}

TEST_CASE("solves are bit-identical across runs") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lp = random_lp(rng, 8, 5, 4);
    const auto a = solve_milp(lp), b = solve_milp(lp);
    CHECK(a.status == b.status);
    CHECK(a.values == b.values);
    CHECK(((a.objective == b.objective) || (std::isinf(a.objective) && std::isinf(b.objective))));
  }
}

TEST_CASE("LinearProgram validation and text dump") {
  LinearProgram lp;
  const int x = lp.add_variable("x", 0, 1, 2.0);
  lp.add_row("r", {{x, 1.0}}, RowSense::Equal, 0.5);
  const auto text = lp.to_lp_text();
  CHECK(text.find("Minimize") != std::string::npos);
  CHECK(text.find("r: ") != std::string::npos);
  CHECK(text.find("Bounds") != std::string::npos);
  CHECK_NOTHROW(lp.validate());
  lp.set_bounds(x, 2.0, 1.0);
  CHECK_THROWS(lp.validate());
}
