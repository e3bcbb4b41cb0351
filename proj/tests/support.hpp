#pragma once

#include <string>
#include <vector>

#include "hems/control/rbc.hpp"
#include "hems/harness/synthetic.hpp"
#include "hems/sim/simulator.hpp"

namespace testing_support {

inline hems::TimeSeries series(hems::Timestamp start, std::vector<double> values,
                               hems::Seconds step = hems::kEmsStep) {
  return hems::TimeSeries{start, step, std::move(values)};
}

inline hems::TimeSeries constant(hems::Timestamp start, int steps, double v, hems::Seconds step = hems::kEmsStep) {
  return series(start, std::vector<double>(static_cast<std::size_t>(steps), v), step);
}

// Flat data (zero load and PV unless given) covering `days` days from `start`.
inline hems::ExogenousData flat_data(hems::Timestamp start, int days, double load_kw = 0.0, double pv_kw = 0.0,
                                     double price = 0.1) {
  const int n = 96 * days;
  hems::ExogenousData d;
  d.load_kw = constant(start, n, load_kw);
  d.pv_kw = constant(start, n, pv_kw);
  d.price = constant(start, n, price);
  return d;
}

inline hems::ExogenousData synthetic(int house_id, hems::Timestamp start, int days, std::uint64_t seed,
                                     bool ev = true) {
  hems::SyntheticOptions o;
  o.start = start;
  o.days = days;
  o.seed = seed;
  o.ev_sessions = ev;
  return hems::synthetic_house_data(hems::HouseConfig::reference(house_id), hems::EvParams{}, o);
}

// Fixed action on every step.
class FixedController final : public hems::Controller {
 public:
  explicit FixedController(hems::ActionPair a) : a_(a) {}
  std::string name() const override { return "fixed"; }
  hems::ActionPair decide(const hems::Observation&, const hems::DecisionContext&) override { return a_; }

 private:
  hems::ActionPair a_;
};

}  // namespace testing_support
