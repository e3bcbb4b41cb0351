#pragma once

// Independent reference computations used by the unit and acceptance tests. They
// re-derive results from the model definitions without calling the library code
// under test.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

// --- tariff -----------------------------------------------------------------

struct Tariff {
  double adder = 0.011;
  double subtractor = 0.009;
  double vat = 1.06;
  double extras = 0.114;
  double peak_price = 3.5;
  double floor_kw = 2.5;
  double yearly = 115.84;
};

inline double offtake_price(double vd, const Tariff& t) {
  const double p = vd + t.adder;
  return p >= 0.0 ? p * t.vat : p;
}
inline double injection_price(double vd, const Tariff& t) { return vd - t.subtractor; }

// --- safety layer -----------------------------------------------------------

// Integer-watt description of one safety problem.
struct SafetyCase {
  long load_w = 0;
  long pv_w = 0;
  long limit_w = 9200;
  long charge_cap_w = 0;
  long discharge_cap_w = 0;
  long ev_cap_w = 0;
  long bess_w = 0;  // proposed, numeric
  long ev_w = 0;
};

struct SafetyAnswer {
  bool feasible = false;
  long bess_w = 0;
  long ev_w = 0;
  double distance_w2 = std::numeric_limits<double>::infinity();  // half squared deviation
};

// Scan of every 1 W BESS value (covering both charge and discharge branches); for each
// the closest admissible 1 W EV value is the proposed one clamped to the admissible
// interval, since the objective is separable once the BESS value is fixed.
inline SafetyAnswer safety_grid_search(const SafetyCase& c) {
  SafetyAnswer best;
  for (long b = -c.charge_cap_w; b <= c.discharge_cap_w; ++b) {
    // grid = pv + b - load - ev, |grid| <= limit
    const long lo = std::max<long>(0, c.pv_w + b - c.load_w - c.limit_w);
    const long hi = std::min<long>(c.ev_cap_w, c.pv_w + b - c.load_w + c.limit_w);
    if (lo > hi) continue;
    const long e = std::clamp(c.ev_w, lo, hi);
    const double db = static_cast<double>(b - c.bess_w);
    const double de = static_cast<double>(e - c.ev_w);
    const double d = 0.5 * (db * db + de * de);
    if (!best.feasible || d < best.distance_w2) {
      best = SafetyAnswer{true, b, e, d};
    }
  }
  return best;
}

// --- MPC brute force ---------------------------------------------------------

// One MPC instance with the decision lattice restricted to power levels.
struct MpcCase {
  int horizon = 1;
  int ev_steps = 0;
  double dt = 0.25;
  // house
  double E = 10.0, eta = 0.95, chg = 3.0, dis = 3.0, soc_cap = 1.0, limit = 20.0;
  double soc0 = 0.5;
  // EV
  double evE = 60.0, ev_eta = 0.95, pmax = 7.4, pmin_full = 1.0, cccv = 0.8;
  double v0 = 0.5, goal = 0.5;
  // series
  std::vector<double> load, pv, vd;
  double prev_peak = 2.5;
  bool terminal = true;
  double penalty = 1e4;  // EUR per kWh of slack
  // enforced-charging buffers, hours
  double bess_bmin = 0.05, bess_bmax = 1.0, ev_bmin = 0.05, ev_bmax = 4.0;
  Tariff tariff;
};

// Cost of a fixed dispatch with every remaining variable at its optimal value; empty
// when the dispatch is infeasible.
inline std::optional<double> mpc_dispatch_cost(const MpcCase& c, const std::vector<double>& bess,
                                               const std::vector<double>& ev) {
  const double s_max = std::max(c.soc_cap, c.soc0);
  const double v_max = std::max(c.goal, c.v0);
  const double k = (c.pmax - c.pmin_full) / (1.0 - c.cccv);
  double cost = 0.0;
  double peak = c.prev_peak;
  double s = c.soc0, v = c.v0;
  std::vector<double> soc(static_cast<std::size_t>(c.horizon)), vsoc(static_cast<std::size_t>(c.ev_steps));
  for (int t = 0; t < c.horizon; ++t) {
    const auto u = static_cast<std::size_t>(t);
    const double b = bess[u];
    const double pch = std::max(-b, 0.0), pdi = std::max(b, 0.0);
    s += c.eta * c.dt * pch / c.E - c.dt * pdi / (c.eta * c.E);
    if (s < -1e-12 || s > s_max + 1e-12) return std::nullopt;
    soc[u] = s;
    double e = 0.0;
    if (t < c.ev_steps) {
      e = ev[u];
      v += c.ev_eta * c.dt * e / c.evE;
      if (v < -1e-12 || v > v_max + 1e-12) return std::nullopt;
      if (e + k * v > c.pmax + k * c.cccv + 1e-9) return std::nullopt;
      vsoc[u] = v;
    }
    const double g = c.pv[u] - c.load[u] + pdi - pch - e;  // kW, injection positive
    if (std::abs(g) > c.limit + 1e-9) return std::nullopt;
    const double eo = std::max(-g, 0.0) * c.dt, ei = std::max(g, 0.0) * c.dt;
    cost += eo * (offtake_price(c.vd[u], c.tariff) + c.tariff.extras) - ei * injection_price(c.vd[u], c.tariff);
    peak = std::max(peak, eo / c.dt);
  }
  cost += c.tariff.peak_price * peak;

  const auto slack_for = [&](const std::vector<double>& x, int n, double x0, double target, double a, double bmin,
                             double bmax) {
    // Terminal row and the per-step deadline rows: a*x_t + db*x_{t-1} + a*sigma >= (a+db)*target - avail.
    double sigma = std::max(0.0, target - x[static_cast<std::size_t>(n - 1)]);
    const double db = bmax - bmin;
    for (int t = 0; t + 1 < n; ++t) {
      const double avail = (n - 1 - t) * c.dt - bmin;
      const double rhs = (a + db) * target - avail;
      if (rhs <= 0.0) continue;
      const double prev = t > 0 ? x[static_cast<std::size_t>(t - 1)] : x0;
      sigma = std::max(sigma, (rhs - a * x[static_cast<std::size_t>(t)] - db * prev) / a);
    }
    return sigma;
  };
  if (c.terminal) {
    const double sigma = slack_for(soc, c.horizon, c.soc0, c.soc_cap, c.E / (c.eta * c.chg), c.bess_bmin, c.bess_bmax);
    if (sigma > 1.0 + 1e-12) return std::nullopt;
    cost += c.penalty * c.E * sigma;
  }
  if (c.ev_steps > 0 && c.goal > c.v0) {
    const double sigma = slack_for(vsoc, c.ev_steps, c.v0, c.goal, c.evE / (c.ev_eta * c.pmax), c.ev_bmin, c.ev_bmax);
    if (sigma > 1.0 + 1e-12) return std::nullopt;
    cost += c.penalty * c.evE * sigma;
  }
  return cost;
}

struct BruteResult {
  double cost = std::numeric_limits<double>::infinity();
  std::vector<double> bess, ev;
  double bound = 0.0;  // worst-case loss from restricting the dispatch to the lattice
  long infeasible = 0;  // lattice points violating a constraint
};

// Exhaustive search over `levels` evenly spaced power levels per asset and step.
inline BruteResult mpc_brute_force(const MpcCase& c, int levels = 21) {
  BruteResult best;
  const int dims = c.horizon + c.ev_steps;
  std::vector<int> idx(static_cast<std::size_t>(dims), 0);
  std::vector<double> bess(static_cast<std::size_t>(c.horizon)), ev(static_cast<std::size_t>(c.ev_steps));
  const double bstep = (c.chg + c.dis) / (levels - 1);
  const double estep = c.pmax / (levels - 1);
  while (true) {
    for (int t = 0; t < c.horizon; ++t) bess[static_cast<std::size_t>(t)] = -c.chg + bstep * idx[static_cast<std::size_t>(t)];
    for (int t = 0; t < c.ev_steps; ++t)
      ev[static_cast<std::size_t>(t)] = estep * idx[static_cast<std::size_t>(c.horizon + t)];
    if (auto v = mpc_dispatch_cost(c, bess, ev); !v) {
      ++best.infeasible;
    } else if (*v < best.cost) {
      best.cost = *v;
      best.bess = bess;
      best.ev = ev;
    }
    int d = 0;
    while (d < dims && ++idx[static_cast<std::size_t>(d)] == levels) idx[static_cast<std::size_t>(d++)] = 0;
    if (d == dims) break;
  }
  // Moving one power by delta kW shifts the step's grid energy by delta*dt (priced at
  // most at the step's largest absolute price), the peak by at most delta, and every
  // later SOC by the same amount, which moves each slack row by at most (1 + db/a) times
  // that SOC change. Rounding a continuous optimum to the lattice moves every power by
  // less than one lattice step.
  const double bess_dsoc = c.dt * std::max(c.eta, 1.0 / c.eta) / c.E;
  const double a_b = c.E / (c.eta * c.chg), a_e = c.evE / (c.ev_eta * c.pmax);
  const double slack_b = c.terminal ? c.penalty * c.E * (1.0 + (c.bess_bmax - c.bess_bmin) / a_b) * bess_dsoc : 0.0;
  const double slack_e = c.goal > c.v0
                             ? c.penalty * c.evE * (1.0 + (c.ev_bmax - c.ev_bmin) / a_e) * c.ev_eta * c.dt / c.evE
                             : 0.0;
  for (int t = 0; t < c.horizon; ++t) {
    const auto u = static_cast<std::size_t>(t);
    const double price = c.dt * std::max(std::abs(offtake_price(c.vd[u], c.tariff) + c.tariff.extras),
                                          std::abs(injection_price(c.vd[u], c.tariff)));
    best.bound += bstep * (price + c.tariff.peak_price + slack_b);
    if (t < c.ev_steps) best.bound += estep * (price + c.tariff.peak_price + slack_e);
  }
  return best;
}

// --- kNN ----------------------------------------------------------------------

inline double cosine(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < 3; ++i) {
    dot += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
    na += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)];
    nb += b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
  }
  return dot / std::sqrt(na * nb);
}

inline std::array<double, 3> knn_features(double soc, double hour) {
  const double pi = std::acos(-1.0);
  return {soc, std::cos(2 * pi * hour / 24), std::sin(2 * pi * hour / 24)};
}

}  // namespace oracle
