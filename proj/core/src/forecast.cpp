#include "hems/forecast/forecast.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace hems::forecast {

namespace {

constexpr Seconds kDay{86400};

std::array<double, 3> features(double soc_start, double hour) {
  const double a = 2.0 * std::numbers::pi * hour / 24.0;
  return {soc_start, std::cos(a), std::sin(a)};
}

double cosine(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace

Forecast persistence_forecast(const TimeSeries& history, Timestamp now, int horizon_steps) {
  if (horizon_steps < 0) throw std::invalid_argument("negative forecast horizon");
  if (!history.covers(now - kDay, now)) throw DataGapError("persistence forecast needs 24 h of history", now - kDay, now);
  Forecast f{now, kEmsStep, {}};
  f.values.reserve(static_cast<std::size_t>(horizon_steps));
  for (int i = 0; i < horizon_steps; ++i) {
    Timestamp t = now + kEmsStep * i - kDay;
    while (t >= now) t -= kDay;
    const auto v = history.try_at(t);
    if (!v) throw DataGapError("persistence forecast: no observation", t, t + kEmsStep);
    f.values.push_back(std::max(0.0, *v));
  }
  return f;
}

Forecast perfect_forecast(const TimeSeries& truth, Timestamp now, int horizon_steps) {
  if (horizon_steps < 0) throw std::invalid_argument("negative forecast horizon");
  const Timestamp end = now + kEmsStep * horizon_steps;
  if (horizon_steps > 0 && !truth.covers(now, end)) throw DataGapError("perfect forecast beyond data", now, end);
  Forecast f{now, kEmsStep, {}};
  f.values.reserve(static_cast<std::size_t>(horizon_steps));
  for (int i = 0; i < horizon_steps; ++i) f.values.push_back(truth.at(now + kEmsStep * i));
  return f;
}

std::vector<SessionRecord> session_records(const std::vector<EvSession>& sessions, const EvParams& ev) {
  std::vector<SessionRecord> out;
  out.reserve(sessions.size());
  for (const auto& s : sessions) {
    out.push_back(SessionRecord{s.soc_start, hour_of_day(s.arrival), to_hours(s.departure - s.arrival),
                                (s.soc_goal - s.soc_start) * ev.capacity_kwh});
  }
  return out;
}

std::vector<std::size_t> knn_neighbours(const std::vector<SessionRecord>& history, const KnnQuery& query,
                                        int k) {
  if (history.empty()) throw std::invalid_argument("kNN: empty session history");
  if (k < 1) throw std::invalid_argument("kNN: k must be at least 1");
  const auto q = features(query.soc_start, query.arrival_hour);
  std::vector<double> sim(history.size());
  for (std::size_t i = 0; i < history.size(); ++i)
    sim[i] = cosine(q, features(history[i].soc_start, history[i].arrival_hour));
  std::vector<std::size_t> idx(history.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return sim[a] > sim[b]; });
  idx.resize(std::min(idx.size(), static_cast<std::size_t>(k)));
  return idx;
}

KnnPrediction knn_predict(const std::vector<SessionRecord>& history, const KnnQuery& query, int k) {
  const auto idx = knn_neighbours(history, query, k);
  KnnPrediction p;
  for (std::size_t i : idx) {
    p.duration_hours += history[i].duration_hours;
    p.energy_kwh += history[i].energy_kwh;
  }
  p.duration_hours /= static_cast<double>(idx.size());
  p.energy_kwh /= static_cast<double>(idx.size());
  return p;
}

SessionForecast knn_ev_forecast(const std::vector<SessionRecord>& history, Timestamp arrival,
                                double soc_start, Timestamp now, int k, const EvParams& ev) {
  const auto p = knn_predict(history, KnnQuery{soc_start, hour_of_day(arrival)}, k);
  SessionForecast f;
  f.departure = arrival + Seconds{static_cast<long>(std::llround(p.duration_hours * 3600.0))};
  if (f.departure < now) f.departure = now;
  f.final_soc = std::clamp(soc_start + p.energy_kwh / ev.capacity_kwh, 0.0, 1.0);
  return f;
}

KnnSessionForecaster::KnnSessionForecaster(std::vector<SessionRecord> history, EvParams ev, int k)
    : history_(std::move(history)), ev_(ev), k_(k) {
  if (history_.empty()) throw std::invalid_argument("kNN: empty session history");
  if (k_ < 1) throw std::invalid_argument("kNN: k must be at least 1");
}

SessionForecast KnnSessionForecaster::forecast(const EvSession& session, Timestamp now) const {
  return knn_ev_forecast(history_, session.arrival, session.soc_start, now, k_, ev_);
}

SessionForecast PerfectSessionForecaster::forecast(const EvSession& session, Timestamp now) const {
  return SessionForecast{std::max(session.departure, now), session.soc_goal};
}

}  // namespace hems::forecast
