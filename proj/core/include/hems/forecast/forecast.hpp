#pragma once

#include <optional>
#include <vector>

#include "hems/series.hpp"
#include "hems/sim/types.hpp"

namespace hems::forecast {

// Quarter-hourly forecast of a non-negative quantity, kW.
struct Forecast {
  Timestamp start{};
  Seconds step{kEmsStep};
  std::vector<double> values;
};

struct SessionForecast {
  Timestamp departure{};
  double final_soc = 0.0;
};

// Seasonal-naive: the value at t is the value observed 24 h earlier (48 h, ... when
// t - 24 h is not yet observed at `now`).
Forecast persistence_forecast(const TimeSeries& history, Timestamp now, int horizon_steps);

// Exact values of `truth` over the horizon.
Forecast perfect_forecast(const TimeSeries& truth, Timestamp now, int horizon_steps);

// Completed session summarized by the kNN features and targets.
struct SessionRecord {
  double soc_start = 0.0;
  double arrival_hour = 0.0;
  double duration_hours = 0.0;
  double energy_kwh = 0.0;
};

std::vector<SessionRecord> session_records(const std::vector<EvSession>& sessions, const EvParams& ev);

struct KnnQuery {
  double soc_start = 0.0;
  double arrival_hour = 0.0;
};

struct KnnPrediction {
  double duration_hours = 0.0;
  double energy_kwh = 0.0;
};

// Mean duration and energy of the k sessions most cosine-similar to the query on
// (soc_start, cos(2 pi h / 24), sin(2 pi h / 24)). Ties keep history order.
KnnPrediction knn_predict(const std::vector<SessionRecord>& history, const KnnQuery& query, int k);

// Indices of the k nearest records, most similar first.
std::vector<std::size_t> knn_neighbours(const std::vector<SessionRecord>& history, const KnnQuery& query,
                                        int k);

SessionForecast knn_ev_forecast(const std::vector<SessionRecord>& history, Timestamp arrival,
                                double soc_start, Timestamp now, int k, const EvParams& ev);

// Load or PV source for the MPC.
class SeriesForecaster {
 public:
  virtual ~SeriesForecaster() = default;
  virtual Forecast forecast(const TimeSeries& series, Timestamp now, int horizon_steps) const = 0;
};

class PersistenceForecaster final : public SeriesForecaster {
 public:
  Forecast forecast(const TimeSeries& series, Timestamp now, int horizon_steps) const override {
    return persistence_forecast(series, now, horizon_steps);
  }
};

class PerfectForecaster final : public SeriesForecaster {
 public:
  Forecast forecast(const TimeSeries& series, Timestamp now, int horizon_steps) const override {
    return perfect_forecast(series, now, horizon_steps);
  }
};

// Departure and final SOC of the connected EV. The kNN implementation only reads the
// arrival time and starting SOC of `session`.
class SessionForecaster {
 public:
  virtual ~SessionForecaster() = default;
  virtual SessionForecast forecast(const EvSession& session, Timestamp now) const = 0;
};

class KnnSessionForecaster final : public SessionForecaster {
 public:
  KnnSessionForecaster(std::vector<SessionRecord> history, EvParams ev, int k = 5);
  SessionForecast forecast(const EvSession& session, Timestamp now) const override;

 private:
  std::vector<SessionRecord> history_;
  EvParams ev_;
  int k_;
};

class PerfectSessionForecaster final : public SessionForecaster {
 public:
  SessionForecast forecast(const EvSession& session, Timestamp now) const override;
};

}  // namespace hems::forecast
