// Dense bounded-variable primal simplex (two phases) and branch-and-bound.
//
// Every row i is written as  sum_j a_ij x_j - r_i = 0  with a logical variable
// r_i bounded by the row range. Rows whose logical cannot start basic within its
// range get an artificial column; phase 1 drives those to zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "hems/mathprog/linear_program.hpp"

namespace hems::mathprog {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kHarrisTol = 1e-9;
constexpr double kZeroTol = 1e-13;
constexpr int kDegenerateBeforeBland = 50;

enum class Phase { One, Two };

class BoundedSimplex {
 public:
  BoundedSimplex(const LinearProgram& lp, const std::vector<double>& lower, const std::vector<double>& upper,
                 const SolverOptions& options)
      : options_(options), m_(lp.num_rows()), n_(lp.num_variables()) {
    setup(lp, lower, upper);
  }

  SolveStatus run() {
    if (num_art_ > 0) {
      load_costs(Phase::One);
      const SolveStatus s = iterate(Phase::One);
      if (s == SolveStatus::IterationLimit) return s;
      refresh_basic_values();
      double infeasibility = 0.0;
      for (int i = 0; i < m_; ++i)
        if (basis_[i] >= n_ + m_) infeasibility += std::max(0.0, x_[basis_[i]]);
      if (infeasibility > options_.feasibility_tol) return SolveStatus::Infeasible;
      retire_artificials();
    }
    load_costs(Phase::Two);
    const SolveStatus s = iterate(Phase::Two);
    refresh_basic_values();
    return s;
  }

  std::vector<double> structural_values() const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) {
      double v = x_[j];
      if (v < lo_[j]) v = lo_[j];
      if (v > hi_[j]) v = hi_[j];
      out[static_cast<std::size_t>(j)] = v;
    }
    return out;
  }

  int iterations() const { return iterations_; }

  struct Snapshot {
    std::vector<int> basis;
    std::vector<double> x;
  };
  Snapshot snapshot() const { return {basis_, x_}; }

  // Pivots this optimal tableau onto the basis of `s`, taken from a tableau that
  // shares the same setup, and restores its point under the given structural bounds.
  bool restore(const Snapshot& s, const std::vector<double>& lower, const std::vector<double>& upper) {
    std::vector<std::uint8_t> want(cols_, 0);
    for (int b : s.basis) want[static_cast<std::size_t>(b)] = 1;
    std::vector<std::size_t> nz;
    nz.reserve(cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
      if (!want[j] || pos_[j] >= 0) continue;
      int r = -1;
      double best = 1e-7;
      for (int i = 0; i < m_; ++i) {
        if (want[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])]) continue;
        const double a = std::abs(t(i, static_cast<int>(j)));
        if (a > best) {
          best = a;
          r = i;
        }
      }
      if (r < 0) return false;
      pivot(r, static_cast<int>(j), nz);
    }
    for (int j = 0; j < n_; ++j) {
      lo_[static_cast<std::size_t>(j)] = lower[static_cast<std::size_t>(j)];
      hi_[static_cast<std::size_t>(j)] = upper[static_cast<std::size_t>(j)];
    }
    x_ = s.x;
    refresh_basic_values();
    return true;
  }

  // Tightens the bounds of structural j on an optimal tableau. A nonbasic variable
  // moves to the bound matching its reduced-cost sign, keeping dual feasibility.
  void change_bounds(int j, double lo, double hi) {
    const auto uj = static_cast<std::size_t>(j);
    lo_[uj] = lo;
    hi_[uj] = hi;
    if (pos_[uj] >= 0) return;
    double target = d_[uj] >= 0.0 ? lo : hi;
    if (!std::isfinite(target)) target = std::isfinite(lo) ? lo : hi;
    const double delta = target - x_[uj];
    if (delta == 0.0) return;
    x_[uj] = target;
    for (int i = 0; i < m_; ++i) {
      const double a = t(i, j);
      if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * delta;
    }
  }

  // Dual simplex from a dual-feasible basis, then a primal clean-up pass.
  SolveStatus reoptimize() {
    std::vector<std::size_t> nz;
    nz.reserve(cols_);
    const double tol = options_.feasibility_tol * 1e-3;
    while (true) {
      if (iterations_ >= options_.max_iterations) return SolveStatus::IterationLimit;
      int r = -1;
      double worst = tol;
      for (int i = 0; i < m_; ++i) {
        const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
        const double v = std::max(lo_[b] - x_[b], x_[b] - hi_[b]);
        if (v > worst) {
          worst = v;
          r = i;
        }
      }
      if (r < 0) break;
      ++iterations_;
      const auto leaving = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
      const bool below = x_[leaving] < lo_[leaving];
      const double bound = below ? lo_[leaving] : hi_[leaving];
      // x_leaving changes by -t_rj * dx_j; it must move up when below, down when above.
      int q = -1;
      double best_ratio = kInfinity;
      double best_abs = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) {
        if (pos_[j] >= 0 || retired_[j]) continue;
        const double a = t(r, static_cast<int>(j));
        if (std::abs(a) <= kPivotTol) continue;
        const double effect_up = below ? -a : a;  // > 0: increasing x_j helps
        const bool up_ok = can_increase(j) && effect_up > 0.0;
        const bool down_ok = can_decrease(j) && effect_up < 0.0;
        if (!up_ok && !down_ok) continue;
        const double ratio = std::abs(d_[j]) / std::abs(a);
        if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && std::abs(a) > best_abs)) {
          best_ratio = ratio;
          best_abs = std::abs(a);
          q = static_cast<int>(j);
        }
      }
      if (q < 0) return SolveStatus::Infeasible;
      const auto uq = static_cast<std::size_t>(q);
      const double delta = (bound - x_[leaving]) / -t(r, q);
      for (int i = 0; i < m_; ++i) {
        const double a = t(i, q);
        if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= a * delta;
      }
      x_[uq] += delta;
      x_[leaving] = bound;
      pivot(r, q, nz);
    }
    const SolveStatus s = iterate(Phase::Two);
    refresh_basic_values();
    return s;
  }

 private:
  double& t(int i, int j) { return tab_[static_cast<std::size_t>(i) * cols_ + static_cast<std::size_t>(j)]; }
  double t(int i, int j) const { return tab_[static_cast<std::size_t>(i) * cols_ + static_cast<std::size_t>(j)]; }

  void setup(const LinearProgram& lp, const std::vector<double>& lower, const std::vector<double>& upper) {
    const auto& rows = lp.rows();
    std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
    std::vector<double> xs(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) {
      const double l = lower[static_cast<std::size_t>(j)];
      const double u = upper[static_cast<std::size_t>(j)];
      xs[static_cast<std::size_t>(j)] = std::isfinite(l) ? l : (std::isfinite(u) ? u : 0.0);
    }
    for (int i = 0; i < m_; ++i)
      for (const auto& term : rows[static_cast<std::size_t>(i)].terms)
        activity[static_cast<std::size_t>(i)] += term.coef * xs[static_cast<std::size_t>(term.var)];

    std::vector<int> needs_art;
    std::vector<double> art_sign(static_cast<std::size_t>(m_), 0.0);
    std::vector<double> logical_value(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      const double act = activity[static_cast<std::size_t>(i)];
      const double tol = options_.feasibility_tol * 1e-3;
      if (act >= r.lower - tol && act <= r.upper + tol) {
        logical_value[static_cast<std::size_t>(i)] = act;
      } else {
        const double v = act < r.lower ? r.lower : r.upper;
        logical_value[static_cast<std::size_t>(i)] = v;
        art_sign[static_cast<std::size_t>(i)] = v > act ? 1.0 : -1.0;
        needs_art.push_back(i);
      }
    }
    num_art_ = static_cast<int>(needs_art.size());
    cols_ = static_cast<std::size_t>(n_ + m_ + num_art_);
    tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
    lo_.assign(cols_, 0.0);
    hi_.assign(cols_, 0.0);
    x_.assign(cols_, 0.0);
    pos_.assign(cols_, -1);
    basis_.assign(static_cast<std::size_t>(m_), -1);
    retired_.assign(cols_, 0);

    for (int j = 0; j < n_; ++j) {
      lo_[j] = lower[static_cast<std::size_t>(j)];
      hi_[j] = upper[static_cast<std::size_t>(j)];
      x_[j] = xs[static_cast<std::size_t>(j)];
    }
    for (int i = 0; i < m_; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      lo_[n_ + i] = r.lower;
      hi_[n_ + i] = r.upper;
      x_[n_ + i] = logical_value[static_cast<std::size_t>(i)];
    }
    int art_col = n_ + m_;
    for (int i = 0; i < m_; ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      const double sign = art_sign[static_cast<std::size_t>(i)];
      if (sign == 0.0) {
        // Basic logical: r_i - sum a x = 0.
        for (const auto& term : r.terms) t(i, term.var) -= term.coef;
        t(i, n_ + i) = 1.0;
        basis_[static_cast<std::size_t>(i)] = n_ + i;
        pos_[static_cast<std::size_t>(n_ + i)] = i;
      } else {
        // Basic artificial: art + (a x - r) / sign = 0.
        for (const auto& term : r.terms) t(i, term.var) += term.coef / sign;
        t(i, n_ + i) = -1.0 / sign;
        t(i, art_col) = 1.0;
        lo_[art_col] = 0.0;
        hi_[art_col] = kInfinity;
        x_[art_col] = std::abs(logical_value[static_cast<std::size_t>(i)] - activity[static_cast<std::size_t>(i)]);
        basis_[static_cast<std::size_t>(i)] = art_col;
        pos_[static_cast<std::size_t>(art_col)] = i;
        ++art_col;
      }
    }
    cost_.assign(cols_, 0.0);
    phase_two_cost_.assign(cols_, 0.0);
    for (int j = 0; j < n_; ++j) phase_two_cost_[j] = lp.variables()[static_cast<std::size_t>(j)].cost;
    d_.assign(cols_, 0.0);
  }

  void load_costs(Phase phase) {
    if (phase == Phase::One) {
      std::fill(cost_.begin(), cost_.end(), 0.0);
      for (std::size_t j = static_cast<std::size_t>(n_ + m_); j < cols_; ++j) cost_[j] = 1.0;
    } else {
      cost_ = phase_two_cost_;
    }
    d_ = cost_;
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])];
      if (cb == 0.0) continue;
      const double* row = &tab_[static_cast<std::size_t>(i) * cols_];
      for (std::size_t j = 0; j < cols_; ++j) d_[j] -= cb * row[j];
    }
    for (int i = 0; i < m_; ++i) d_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = 0.0;
  }

  void refresh_basic_values() {
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < cols_; ++j)
      if (pos_[j] < 0 && x_[j] != 0.0) active.push_back(j);
    for (int i = 0; i < m_; ++i) {
      const double* row = &tab_[static_cast<std::size_t>(i) * cols_];
      double v = 0.0;
      for (std::size_t j : active) v -= row[j] * x_[j];
      x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] = v;
    }
  }

  bool can_increase(std::size_t j) const { return x_[j] < hi_[j] - kZeroTol; }
  bool can_decrease(std::size_t j) const { return x_[j] > lo_[j] + kZeroTol; }

  int choose_entering(bool bland) const {
    int best = -1;
    double best_score = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      if (pos_[j] >= 0 || retired_[j]) continue;
      const double dj = d_[j];
      const bool eligible = (dj < -kCostTol && can_increase(j)) || (dj > kCostTol && can_decrease(j));
      if (!eligible) continue;
      if (bland) return static_cast<int>(j);
      const double score = std::abs(dj);
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(j);
      }
    }
    return best;
  }

  SolveStatus iterate(Phase phase) {
    int degenerate_streak = 0;
    std::vector<std::size_t> nz;
    nz.reserve(cols_);
    while (true) {
      if (iterations_ >= options_.max_iterations) return SolveStatus::IterationLimit;
      const bool bland = degenerate_streak > kDegenerateBeforeBland;
      const int q = choose_entering(bland);
      if (q < 0) return SolveStatus::Optimal;
      ++iterations_;
      const auto uq = static_cast<std::size_t>(q);
      const double dir = d_[uq] < 0.0 ? 1.0 : -1.0;

      // Harris two-pass ratio test.
      double theta_max = kInfinity;
      for (int i = 0; i < m_; ++i) {
        const double alpha = t(i, q);
        if (std::abs(alpha) <= kPivotTol) continue;
        const double rate = -alpha * dir;
        const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
        double bound_room;
        if (rate < 0.0) {
          if (!std::isfinite(lo_[b])) continue;
          bound_room = (x_[b] - lo_[b] + kHarrisTol) / -rate;
        } else {
          if (!std::isfinite(hi_[b])) continue;
          bound_room = (hi_[b] - x_[b] + kHarrisTol) / rate;
        }
        theta_max = std::min(theta_max, bound_room);
      }
      int leave_row = -1;
      double theta = kInfinity;
      double best_alpha = 0.0;
      if (std::isfinite(theta_max)) {
        for (int i = 0; i < m_; ++i) {
          const double alpha = t(i, q);
          if (std::abs(alpha) <= kPivotTol) continue;
          const double rate = -alpha * dir;
          const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
          double ratio;
          if (rate < 0.0) {
            if (!std::isfinite(lo_[b])) continue;
            ratio = (x_[b] - lo_[b]) / -rate;
          } else {
            if (!std::isfinite(hi_[b])) continue;
            ratio = (hi_[b] - x_[b]) / rate;
          }
          ratio = std::max(ratio, 0.0);
          if (ratio > theta_max) continue;
          bool take;
          if (leave_row < 0) {
            take = true;
          } else if (bland) {
            take = basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave_row)];
          } else {
            take = std::abs(alpha) > best_alpha;
          }
          if (take) {
            leave_row = i;
            theta = ratio;
            best_alpha = std::abs(alpha);
          }
        }
      }
      const double flip = hi_[uq] - lo_[uq];
      const bool bound_flip = std::isfinite(flip) && flip <= theta;
      if (!bound_flip && leave_row < 0) {
        return phase == Phase::One ? SolveStatus::Infeasible : SolveStatus::Unbounded;
      }
      const double step = bound_flip ? flip : theta;
      degenerate_streak = step <= 1e-12 ? degenerate_streak + 1 : 0;

      if (step != 0.0) {
        for (int i = 0; i < m_; ++i) {
          const double alpha = t(i, q);
          if (alpha == 0.0) continue;
          x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])] -= alpha * dir * step;
        }
      }
      if (bound_flip) {
        x_[uq] = dir > 0.0 ? hi_[uq] : lo_[uq];
        continue;
      }
      x_[uq] += dir * step;

      const auto r = leave_row;
      const auto leaving = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
      const double rate = -t(r, q) * dir;
      x_[leaving] = rate < 0.0 ? lo_[leaving] : hi_[leaving];
      if (leaving >= static_cast<std::size_t>(n_ + m_)) {
        retired_[leaving] = 1;
        lo_[leaving] = hi_[leaving] = 0.0;
        x_[leaving] = 0.0;
      }
      pivot(r, q, nz);
    }
  }

  void pivot(int r, int q, std::vector<std::size_t>& nz) {
    const auto uq = static_cast<std::size_t>(q);
    double* prow = &tab_[static_cast<std::size_t>(r) * cols_];
    const double inv = 1.0 / prow[uq];
    nz.clear();
    for (std::size_t j = 0; j < cols_; ++j) {
      if (prow[j] == 0.0) continue;
      prow[j] *= inv;
      if (std::abs(prow[j]) < kZeroTol) {
        prow[j] = 0.0;
        continue;
      }
      nz.push_back(j);
    }
    prow[uq] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[static_cast<std::size_t>(i) * cols_];
      const double f = row[uq];
      if (f == 0.0) continue;
      for (std::size_t j : nz) row[j] -= f * prow[j];
      row[uq] = 0.0;
    }
    const double fd = d_[uq];
    if (fd != 0.0) {
      for (std::size_t j : nz) d_[j] -= fd * prow[j];
    }
    d_[uq] = 0.0;
    const auto leaving = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
    pos_[leaving] = -1;
    basis_[static_cast<std::size_t>(r)] = q;
    pos_[uq] = r;
  }

  void retire_artificials() {
    std::vector<std::size_t> nz;
    for (std::size_t j = static_cast<std::size_t>(n_ + m_); j < cols_; ++j) {
      retired_[j] = 1;
      lo_[j] = hi_[j] = 0.0;
    }
    for (int i = 0; i < m_; ++i) {
      const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)]);
      if (b < static_cast<std::size_t>(n_ + m_)) continue;
      x_[b] = 0.0;
      int best = -1;
      double best_abs = 1e-7;
      for (std::size_t j = 0; j < static_cast<std::size_t>(n_ + m_); ++j) {
        if (pos_[j] >= 0) continue;
        const double a = std::abs(t(i, static_cast<int>(j)));
        if (a > best_abs) {
          best_abs = a;
          best = static_cast<int>(j);
        }
      }
      // A row with no usable column is redundant; its artificial stays basic at zero.
      if (best >= 0) pivot(i, best, nz);
    }
  }

  SolverOptions options_;
  int m_;
  int n_;
  int num_art_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> tab_;
  std::vector<double> lo_, hi_, x_, cost_, phase_two_cost_, d_;
  std::vector<int> pos_;
  std::vector<int> basis_;
  std::vector<std::uint8_t> retired_;
  int iterations_ = 0;
};

struct Relaxation {
  SolveStatus status;
  std::vector<double> values;
  double objective;
  int iterations;
};

Relaxation solve_relaxation(const LinearProgram& lp, const std::vector<double>& lower,
                            const std::vector<double>& upper, const SolverOptions& options) {
  BoundedSimplex simplex(lp, lower, upper, options);
  Relaxation r;
  r.status = simplex.run();
  r.iterations = simplex.iterations();
  if (r.status == SolveStatus::Optimal) {
    r.values = simplex.structural_values();
    r.objective = lp.objective(r.values);
  } else {
    r.objective = kInfinity;
  }
  return r;
}

void initial_bounds(const LinearProgram& lp, std::vector<double>& lower, std::vector<double>& upper) {
  lower.clear();
  upper.clear();
  for (const auto& v : lp.variables()) {
    lower.push_back(v.binary ? std::max(v.lower, 0.0) : v.lower);
    upper.push_back(v.binary ? std::min(v.upper, 1.0) : v.upper);
  }
}

}  // namespace

MipSolution solve_lp(const LinearProgram& lp, const SolverOptions& options) {
  lp.validate();
  std::vector<double> lower, upper;
  initial_bounds(lp, lower, upper);
  const Relaxation r = solve_relaxation(lp, lower, upper, options);
  MipSolution s;
  s.status = r.status;
  s.iterations = r.iterations;
  s.nodes = 1;
  if (r.status == SolveStatus::Optimal) {
    s.values = r.values;
    s.objective = r.objective;
    s.gap = 0.0;
  }
  return s;
}

namespace {

struct Node {
  double bound;
  long id;
  std::vector<std::pair<int, double>> fixes;
  // Optimal basis of the parent; the child only adds the last fix.
  std::shared_ptr<const BoundedSimplex::Snapshot> warm;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

class RoundingHeuristic {
 public:
  explicit RoundingHeuristic(const LinearProgram& lp) : lp_(lp), rows_of_(static_cast<std::size_t>(lp.num_variables())) {
    for (int i = 0; i < lp.num_rows(); ++i)
      for (const auto& t : lp.rows()[static_cast<std::size_t>(i)].terms)
        rows_of_[static_cast<std::size_t>(t.var)].push_back(i);
  }

  // Rounds fractional binaries so that the remaining assignment stays feasible;
  // returns true with x modified on success.
  bool round(std::vector<double>& x, const std::vector<int>& binaries, double tol) const {
    std::vector<double> trial = x;
    for (int j : binaries) trial[static_cast<std::size_t>(j)] = std::round(trial[static_cast<std::size_t>(j)]);
    if (lp_.max_violation(trial) <= tol) {
      x = std::move(trial);
      return true;
    }
    trial = x;
    for (int j : binaries) {
      auto& v = trial[static_cast<std::size_t>(j)];
      const double nearest = std::round(v);
      v = nearest;
      const double keep = local_violation(trial, j);
      v = 1.0 - nearest;
      const double other = local_violation(trial, j);
      v = other < keep ? 1.0 - nearest : nearest;
    }
    if (lp_.max_violation(trial) <= tol) {
      x = std::move(trial);
      return true;
    }
    return false;
  }

 private:
  double local_violation(const std::vector<double>& x, int var) const {
    double total = 0.0;
    for (int i : rows_of_[static_cast<std::size_t>(var)]) {
      const auto& r = lp_.rows()[static_cast<std::size_t>(i)];
      double act = 0.0;
      for (const auto& t : r.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
      total += std::max(0.0, r.lower - act) + std::max(0.0, act - r.upper);
    }
    return total;
  }

  const LinearProgram& lp_;
  std::vector<std::vector<int>> rows_of_;
};

}  // namespace

MipSolution solve_milp(const LinearProgram& lp, const SolverOptions& options) {
  lp.validate();
  std::vector<int> binaries;
  for (int j = 0; j < lp.num_variables(); ++j)
    if (lp.variables()[static_cast<std::size_t>(j)].binary) binaries.push_back(j);
  if (binaries.empty()) return solve_lp(lp, options);

  std::vector<double> base_lower, base_upper;
  initial_bounds(lp, base_lower, base_upper);
  const RoundingHeuristic heuristic(lp);

  MipSolution best;
  best.status = SolveStatus::Infeasible;
  double incumbent = kInfinity;
  const auto prune_level = [&] { return incumbent - options.relative_gap * std::max(1.0, std::abs(incumbent)); };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push(Node{-kInfinity, next_id++, {}, nullptr});
  bool limit_hit = false;
  int iterations = 0;
  int nodes = 0;

  std::vector<double> lower, upper;
  const auto node_bounds = [&](const Node& node, std::size_t count) {
    lower = base_lower;
    upper = base_upper;
    for (std::size_t k = 0; k < count; ++k) {
      const auto& [var, value] = node.fixes[k];
      lower[static_cast<std::size_t>(var)] = value;
      upper[static_cast<std::size_t>(var)] = value;
    }
  };
  // Optimal root tableau; queued nodes restart from a copy of it.
  std::unique_ptr<const BoundedSimplex> root;
  // Preferred child of the last branching, solved on its parent's tableau in place.
  std::optional<Node> dive;
  std::unique_ptr<BoundedSimplex> dive_state;
  bool dive_shares_root = false;

  while (true) {
    Node node;
    std::unique_ptr<BoundedSimplex> state;
    bool shares_root = false;  // tableau laid out like the root's
    if (dive) {
      node = std::move(*dive);
      dive.reset();
      state = std::move(dive_state);
      shares_root = dive_shares_root;
      if (node.bound >= prune_level()) continue;
    } else {
      if (open.empty()) break;
      if (open.top().bound >= prune_level()) {
        open.pop();
        continue;
      }
      node = open.top();
      open.pop();
      if (node.warm && root) {
        state = std::make_unique<BoundedSimplex>(*root);
        node_bounds(node, node.fixes.size() - 1);
        shares_root = state->restore(*node.warm, lower, upper);
        if (!shares_root) state.reset();
      }
      node.warm.reset();
    }
    if (nodes >= options.max_nodes) {
      open.push(std::move(node));
      limit_hit = true;
      break;
    }
    ++nodes;

    SolveStatus status = SolveStatus::IterationLimit;
    if (state) {
      const int before = state->iterations();
      const auto& [var, value] = node.fixes.back();
      state->change_bounds(var, value, value);
      status = state->reoptimize();
      iterations += state->iterations() - before;
    }
    if (!state || status == SolveStatus::IterationLimit || status == SolveStatus::Unbounded) {
      node_bounds(node, node.fixes.size());
      state = std::make_unique<BoundedSimplex>(lp, lower, upper, options);
      status = state->run();
      iterations += state->iterations();
      shares_root = node.fixes.empty();
    }
    if (!root && node.fixes.empty() && status == SolveStatus::Optimal)
      root = std::make_unique<const BoundedSimplex>(*state);

    if (status == SolveStatus::Unbounded) {
      best.status = SolveStatus::Unbounded;
      best.nodes = nodes;
      best.iterations = iterations;
      return best;
    }
    if (status == SolveStatus::IterationLimit) {
      limit_hit = true;
      continue;
    }
    if (status != SolveStatus::Optimal) continue;
    const std::vector<double> values = state->structural_values();
    const double objective = lp.objective(values);
    if (objective >= prune_level()) continue;

    int branch_var = -1;
    double most = 0.0;
    for (int j : binaries) {
      const double v = values[static_cast<std::size_t>(j)];
      const double frac = std::abs(v - std::round(v));
      if (frac > options.integrality_tol && frac > most + 1e-12) {
        most = frac;
        branch_var = j;
      }
    }
    if (branch_var < 0) {
      std::vector<double> x = values;
      for (int j : binaries) x[static_cast<std::size_t>(j)] = std::round(x[static_cast<std::size_t>(j)]);
      incumbent = objective;
      best.values = std::move(x);
      best.objective = lp.objective(best.values);
      continue;
    }
    std::vector<double> rounded = values;
    if (heuristic.round(rounded, binaries, options.feasibility_tol)) {
      const double obj = lp.objective(rounded);
      if (obj < incumbent) {
        incumbent = obj;
        best.values = std::move(rounded);
        best.objective = obj;
      }
    }
    if (objective >= prune_level()) continue;
    const double first = values[static_cast<std::size_t>(branch_var)] >= 0.5 ? 1.0 : 0.0;
    std::shared_ptr<const BoundedSimplex::Snapshot> warm;
    if (shares_root) warm = std::make_shared<const BoundedSimplex::Snapshot>(state->snapshot());
    Node child{objective, next_id++, node.fixes, nullptr};
    child.fixes.emplace_back(branch_var, first);
    Node sibling{objective, next_id++, std::move(node.fixes), std::move(warm)};
    sibling.fixes.emplace_back(branch_var, 1.0 - first);
    open.push(std::move(sibling));
    dive = std::move(child);
    dive_state = std::move(state);
    dive_shares_root = shares_root;
  }

  best.nodes = nodes;
  best.iterations = iterations;
  if (!std::isfinite(incumbent)) {
    best.status = limit_hit ? SolveStatus::IterationLimit : SolveStatus::Infeasible;
    return best;
  }
  double bound = incumbent;
  if (!open.empty()) bound = std::min(bound, open.top().bound);
  best.gap = std::max(0.0, (incumbent - bound) / std::max(1.0, std::abs(incumbent)));
  best.status = (limit_hit && best.gap > options.relative_gap) ? SolveStatus::IterationLimit : SolveStatus::Optimal;
  return best;
}

}  // namespace hems::mathprog
