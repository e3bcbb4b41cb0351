#pragma once

#include <span>
#include <vector>

#include "hems/series.hpp"
#include "hems/sim/types.hpp"

namespace hems {

// Dynamic day-ahead contract: day-ahead energy, flat offtake extras, monthly peak
// and a fixed yearly fee. Prices in EUR/kWh, EUR/kW, EUR/year.
struct TariffParams {
  double injection_adder = 0.011;     // added to the day-ahead price for offtake
  double offtake_subtractor = 0.009;  // subtracted from the day-ahead price for injection
  double vat = 1.06;                  // applied to non-negative offtake prices
  double offtake_extras = 0.114;
  double peak_price = 3.5;
  double peak_floor_kw = 2.5;
  double yearly = 115.84;

  void validate() const;
};

struct SpotPrices {
  double offtake = 0.0;
  double injection = 0.0;
};

SpotPrices spot_prices(double day_ahead, const TariffParams& params = {});

// One 15-minute billing step.
struct MeteredStep {
  Timestamp time{};
  double imported_kwh = 0.0;
  double exported_kwh = 0.0;
};

std::vector<MeteredStep> metered(std::span<const StepTrace> traces);

// billed_fraction * Vp * max(max offtake power, floor).
double peak_cost(std::span<const double> offtake_kwh, double billed_fraction,
                 const TariffParams& params = {});

struct CostBreakdown {
  double day_ahead = 0.0;
  double offtake_extras = 0.0;
  double peak = 0.0;
  double yearly = 0.0;
  double total = 0.0;
  bool operator==(const CostBreakdown&) const = default;
};

// Import/export accounting. `day_ahead` may be hourly or finer; each step uses the
// value covering its start time.
CostBreakdown total_cost(std::span<const MeteredStep> steps, const TimeSeries& day_ahead,
                         const TariffParams& params = {});
CostBreakdown total_cost(std::span<const StepTrace> traces, const TimeSeries& day_ahead,
                         const TariffParams& params = {});

// Same contract billed on the per-step net consumption (import minus export).
CostBreakdown net_consumption_cost(std::span<const MeteredStep> steps, const TimeSeries& day_ahead,
                                   const TariffParams& params = {});
CostBreakdown net_consumption_cost(std::span<const StepTrace> traces, const TimeSeries& day_ahead,
                                   const TariffParams& params = {});

}  // namespace hems
