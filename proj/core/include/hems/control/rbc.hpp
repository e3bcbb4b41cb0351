#pragma once

#include <cstdint>
#include <random>

#include "hems/sim/simulator.hpp"

namespace hems {

// Self-consumption BESS; the EV is asked for full power whenever it is connected.
ActionPair rbc_step(const Observation& obs, const EvParams& ev);

class RbcController final : public Controller {
 public:
  std::string name() const override { return "RBC"; }
  ActionPair decide(const Observation& obs, const DecisionContext& ctx) override {
    return rbc_step(obs, ctx.ev);
  }
};

// Uniform random setpoints over the full rated action box, regardless of feasibility.
ActionPair exploration_stub_step(const Observation& obs, std::mt19937_64& rng, const HouseConfig& house,
                                 const EvParams& ev);

// Stand-in for a learning agent: explores the whole action space and relies on the
// safety layer to stay within the grid limits.
class ExplorationController final : public Controller {
 public:
  explicit ExplorationController(std::uint64_t seed) : rng_(seed) {}
  std::string name() const override { return "RL-stub"; }
  ActionPair decide(const Observation& obs, const DecisionContext& ctx) override {
    return exploration_stub_step(obs, rng_, ctx.house, ctx.ev);
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace hems
