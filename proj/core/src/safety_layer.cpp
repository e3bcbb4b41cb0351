#include "hems/safety/safety_layer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace hems {

namespace {

constexpr double kWattsPerKw = 1000.0;
constexpr double kIdentityTolW = 1e-6;

struct Point {
  double bess = 0.0;  // W
  double ev = 0.0;    // W
};

// Feasible region in watts: box on (bess, ev) intersected with the slab
// slab_lo <= bess - ev <= slab_hi derived from the grid balance.
struct Region {
  double bess_lo, bess_hi, ev_hi, slab_lo, slab_hi;
};

Region region_of(const SafetyContext& ctx, const AssetCaps& caps, double limit_kw) {
  const double net = (ctx.load_kw - ctx.pv_kw) * kWattsPerKw;
  const double limit = limit_kw * kWattsPerKw;
  return Region{-caps.bess_charge_kw * kWattsPerKw, caps.bess_discharge_kw * kWattsPerKw,
                caps.ev_kw * kWattsPerKw, net - limit, net + limit};
}

bool inside(const Point& p, const Region& r, double tol) {
  const double diff = p.bess - p.ev;
  return p.bess >= r.bess_lo - tol && p.bess <= r.bess_hi + tol && p.ev >= -tol && p.ev <= r.ev_hi + tol &&
         diff >= r.slab_lo - tol && diff <= r.slab_hi + tol;
}

double half_sq_dist(const Point& a, const Point& b) {
  const double db = a.bess - b.bess;
  const double de = a.ev - b.ev;
  return 0.5 * (db * db + de * de);
}

// Projection of `target` onto {lo <= bess <= hi, 0 <= ev <= ev_hi} intersected with the slab.
std::optional<Point> project_branch(const Point& target, double lo, double hi, const Region& r) {
  std::optional<Point> best;
  double best_obj = std::numeric_limits<double>::infinity();
  const auto consider = [&](const Point& p) {
    const double obj = half_sq_dist(p, target);
    if (obj < best_obj) {
      best_obj = obj;
      best = p;
    }
  };
  const Point clamped{std::clamp(target.bess, lo, hi), std::clamp(target.ev, 0.0, r.ev_hi)};
  const double diff = clamped.bess - clamped.ev;
  if (diff >= r.slab_lo && diff <= r.slab_hi) return clamped;
  for (double c : {r.slab_lo, r.slab_hi}) {
    // Along bess - ev = c: ev in [max(0, lo - c), min(ev_hi, hi - c)].
    const double e_lo = std::max(0.0, lo - c);
    const double e_hi = std::min(r.ev_hi, hi - c);
    if (e_lo > e_hi) continue;
    const double e = std::clamp(0.5 * (target.bess - c + target.ev), e_lo, e_hi);
    consider(Point{c + e, e});
  }
  return best;
}

}  // namespace

AssetCaps SafetyContext::caps() const {
  return available_caps(house, bess_soc, ev_soc, ev_soc_goal, ev, step_hours);
}

double SafetyContext::active_limit_kw() const {
  if (mode == GridLimitMode::ActivePower) return house.grid_limit_active_kw;
  const double s = house.grid_limit_apparent_kva;
  const double q = reactive_kvar;
  if (std::abs(q) > s) return -1.0;
  return std::sqrt(s * s - q * q);
}

ActionPair resolve_actions(const ActionPair& proposed, const SafetyContext& ctx) {
  if (!proposed.bess.is_self_consumption()) return proposed;
  const auto caps = ctx.caps();
  const double ev = std::clamp(proposed.ev_kw, 0.0, caps.ev_kw);
  return ActionPair{BessCommand::power(self_consumption_setpoint(ctx.load_kw, ctx.pv_kw, ev, caps)),
                    proposed.ev_kw};
}

bool is_feasible(const ActionPair& numeric, const SafetyContext& ctx, double tol_kw) {
  const double limit = ctx.active_limit_kw();
  if (limit < 0.0) return false;
  const auto r = region_of(ctx, ctx.caps(), limit);
  return inside(Point{numeric.bess.kw() * kWattsPerKw, numeric.ev_kw * kWattsPerKw}, r, tol_kw * kWattsPerKw);
}

SafetyResult correct_actions(const ActionPair& proposed, const SafetyContext& ctx) {
  const ActionPair numeric = resolve_actions(proposed, ctx);
  const Point target{numeric.bess.kw() * kWattsPerKw, numeric.ev_kw * kWattsPerKw};
  const auto caps = ctx.caps();
  const double limit = ctx.active_limit_kw();
  const Region r = region_of(ctx, caps, std::max(limit, 0.0));

  SafetyResult result;
  if (limit >= 0.0 && inside(target, r, kIdentityTolW)) {
    result.safe_actions = numeric;
    return result;
  }
  result.activated = true;

  const bool empty = limit < 0.0 || r.bess_hi < r.slab_lo || r.bess_lo - r.ev_hi > r.slab_hi;
  if (empty) {
    // Least-violating corner: everything towards covering the deficit or absorbing the surplus.
    const Point p = (limit < 0.0 || r.bess_hi < r.slab_lo) ? Point{r.bess_hi, 0.0} : Point{r.bess_lo, r.ev_hi};
    result.safe_actions = ActionPair{BessCommand::power(p.bess / kWattsPerKw), p.ev / kWattsPerKw};
    result.distance = std::numeric_limits<double>::infinity();
    result.feasible = false;
    return result;
  }

  // Charge (bess <= 0) and discharge (bess >= 0) branches of the binary mode variable.
  std::optional<Point> best;
  double best_obj = std::numeric_limits<double>::infinity();
  const std::array<std::pair<double, double>, 2> branches{{{r.bess_lo, 0.0}, {0.0, r.bess_hi}}};
  for (const auto& [lo, hi] : branches) {
    if (lo > hi) continue;
    if (auto p = project_branch(target, lo, hi, r)) {
      const double obj = half_sq_dist(*p, target);
      if (obj < best_obj) {
        best_obj = obj;
        best = p;
      }
    }
  }
  // Non-empty region always yields a candidate in one of the branches.
  result.safe_actions = ActionPair{BessCommand::power(best->bess / kWattsPerKw), best->ev / kWattsPerKw};
  result.distance = best_obj;
  return result;
}

ActionPair fallback_policy(const SafetyContext& ctx) {
  const auto caps = ctx.caps();
  const double limit = ctx.active_limit_kw();
  if (!ctx.ev_soc || caps.ev_kw <= 0.0 || limit < 0.0) return ActionPair{BessCommand::self_consumption(), 0.0};
  // With self-consumption the BESS covers demand up to its discharge cap and absorbs
  // surplus up to its charge cap; the EV takes whatever headroom is left.
  const double offtake_room = limit + caps.bess_discharge_kw + ctx.pv_kw - ctx.load_kw;
  const double injection_need = ctx.pv_kw - ctx.load_kw - caps.bess_charge_kw - limit;
  double ev = std::clamp(offtake_room, 0.0, caps.ev_kw);
  if (ev < injection_need) ev = std::clamp(injection_need, 0.0, caps.ev_kw);
  return ActionPair{BessCommand::self_consumption(), ev};
}

SafetyResult apply_safety(const ActionPair& proposed, const SafetyContext& ctx, double d_threshold) {
  if (!(d_threshold > 0.0)) throw DomainError("fallback threshold must be positive");
  SafetyResult r = correct_actions(proposed, ctx);
  if (r.distance <= d_threshold) return r;
  SafetyResult fb;
  fb.safe_actions = fallback_policy(ctx);
  fb.distance = r.distance;
  fb.activated = true;
  fb.fallback_used = true;
  // Re-run the layer on the resolved fallback; it is feasible whenever the region is non-empty.
  const SafetyResult check = correct_actions(fb.safe_actions, ctx);
  fb.feasible = check.feasible && check.distance == 0.0;
  return fb;
}

}  // namespace hems
