#include "hems/tariff/tariff.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>

namespace hems {

void TariffParams::validate() const {
  for (double v : {injection_adder, offtake_subtractor, vat, offtake_extras, peak_price, peak_floor_kw, yearly}) {
    if (!std::isfinite(v)) throw DomainError("tariff prices must be finite");
  }
  if (vat < 1.0) throw DomainError("VAT factor must be >= 1");
  if (peak_floor_kw <= 0.0) throw DomainError("peak floor must be positive");
}

SpotPrices spot_prices(double day_ahead, const TariffParams& params) {
  const double gross = day_ahead + params.injection_adder;
  return SpotPrices{gross >= 0.0 ? gross * params.vat : gross, day_ahead - params.offtake_subtractor};
}

std::vector<MeteredStep> metered(std::span<const StepTrace> traces) {
  std::vector<MeteredStep> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back({t.time, t.imported_kwh, t.exported_kwh});
  return out;
}

double peak_cost(std::span<const double> offtake_kwh, double billed_fraction, const TariffParams& params) {
  double peak_kw = params.peak_floor_kw;
  for (double e : offtake_kwh) peak_kw = std::max(peak_kw, e / kEmsStepHours);
  return billed_fraction * params.peak_price * peak_kw;
}

namespace {

CostBreakdown bill(std::span<const MeteredStep> steps, const TimeSeries& day_ahead,
                   const TariffParams& params, bool net) {
  using namespace std::chrono;
  CostBreakdown c;
  std::map<year_month, std::vector<double>> months;
  for (const auto& s : steps) {
    double imported = s.imported_kwh;
    double exported = s.exported_kwh;
    if (net) {
      const double balance = imported - exported;
      imported = std::max(balance, 0.0);
      exported = std::max(-balance, 0.0);
    }
    const auto vd = day_ahead.try_at(s.time);
    if (!vd) throw DataGapError("missing day-ahead price", s.time, s.time + kEmsStep);
    const auto prices = spot_prices(*vd, params);
    c.day_ahead += imported * prices.offtake - exported * prices.injection;
    c.offtake_extras += imported * params.offtake_extras;
    months[year_month_of(s.time)].push_back(imported);
    const year y = year_month_of(s.time).year();
    c.yearly += params.yearly / (96.0 * days_in_year(y));
  }
  for (const auto& [ym, energies] : months) {
    const double billed = static_cast<double>(energies.size()) / (96.0 * days_in_month(ym));
    c.peak += peak_cost(energies, billed, params);
  }
  c.total = c.day_ahead + c.offtake_extras + c.peak + c.yearly;
  return c;
}

}  // namespace

CostBreakdown total_cost(std::span<const MeteredStep> steps, const TimeSeries& day_ahead,
                         const TariffParams& params) {
  return bill(steps, day_ahead, params, false);
}

CostBreakdown total_cost(std::span<const StepTrace> traces, const TimeSeries& day_ahead,
                         const TariffParams& params) {
  const auto steps = metered(traces);
  return bill(steps, day_ahead, params, false);
}

CostBreakdown net_consumption_cost(std::span<const MeteredStep> steps, const TimeSeries& day_ahead,
                                   const TariffParams& params) {
  return bill(steps, day_ahead, params, true);
}

CostBreakdown net_consumption_cost(std::span<const StepTrace> traces, const TimeSeries& day_ahead,
                                   const TariffParams& params) {
  const auto steps = metered(traces);
  return bill(steps, day_ahead, params, true);
}

}  // namespace hems
