#include "hems/control/rbc.hpp"

namespace hems {

ActionPair rbc_step(const Observation& obs, const EvParams& ev) {
  return ActionPair{BessCommand::self_consumption(), obs.session ? ev.p_max_kw : 0.0};
}

ActionPair exploration_stub_step(const Observation& /*obs*/, std::mt19937_64& rng, const HouseConfig& house,
                                 const EvParams& ev) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u_bess = unit(rng);
  const double u_ev = unit(rng);
  const double span = house.bess_max_charge_kw + house.bess_max_discharge_kw;
  return ActionPair{BessCommand::power(-house.bess_max_charge_kw + u_bess * span), u_ev * ev.p_max_kw};
}

}  // namespace hems
