#pragma once

#include <optional>

#include "hems/sim/physics.hpp"
#include "hems/sim/types.hpp"

namespace hems {

enum class GridLimitMode { ActivePower, ApparentPower };

// Latest measurements plus asset state for one safety-layer evaluation.
struct SafetyContext {
  double load_kw = 0.0;
  double pv_kw = 0.0;
  double reactive_kvar = 0.0;  // used in ApparentPower mode only
  double bess_soc = 1.0;
  std::optional<double> ev_soc;       // absent when no EV is connected
  std::optional<double> ev_soc_goal;  // charging stops at the session goal
  EvParams ev;
  HouseConfig house;
  GridLimitMode mode = GridLimitMode::ActivePower;
  // Interval the actions will be held for; 0 keeps the pure SOC-binary availability.
  double step_hours = 0.0;

  AssetCaps caps() const;
  // Limit on |active grid power|; negative when the reactive load alone exceeds the
  // apparent-power limit.
  double active_limit_kw() const;
};

struct SafetyResult {
  ActionPair safe_actions;
  double distance = 0.0;  // W^2; +infinity when the feasible set is empty
  bool activated = false;
  bool fallback_used = false;
  bool feasible = true;
};

inline constexpr double kDefaultFallbackThreshold = 1e6;

// Resolves a self-consumption command into a numeric setpoint for this context.
ActionPair resolve_actions(const ActionPair& proposed, const SafetyContext& ctx);

// Closest feasible (bess, ev) pair to the proposed one in the Euclidean sense.
SafetyResult correct_actions(const ActionPair& proposed, const SafetyContext& ctx);

// Self-consumption BESS with the largest EV power that stays within the grid limit.
ActionPair fallback_policy(const SafetyContext& ctx);

SafetyResult apply_safety(const ActionPair& proposed, const SafetyContext& ctx,
                          double d_threshold = kDefaultFallbackThreshold);

bool is_feasible(const ActionPair& numeric, const SafetyContext& ctx, double tol_kw = 1e-6);

}  // namespace hems
