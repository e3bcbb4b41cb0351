#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hems/time.hpp"

namespace hems {

// Thrown when a simulation or cost query reaches outside the data it was given.
class DataGapError : public std::runtime_error {
 public:
  DataGapError(const std::string& what, Timestamp from, Timestamp to)
      : std::runtime_error(what + " [" + format_iso(from) + ", " + format_iso(to) + ")"),
        from_(from),
        to_(to) {}
  Timestamp from() const { return from_; }
  Timestamp to() const { return to_; }

 private:
  Timestamp from_;
  Timestamp to_;
};

// Values on a regular grid; value i holds over [start + i*step, start + (i+1)*step).
struct TimeSeries {
  Timestamp start{};
  Seconds step{kEmsStep};
  std::vector<double> values;

  bool empty() const { return values.empty(); }
  std::size_t size() const { return values.size(); }
  Timestamp end() const { return start + step * static_cast<long>(values.size()); }
  Timestamp time_at(std::size_t i) const { return start + step * static_cast<long>(i); }

  bool covers(Timestamp from, Timestamp to) const { return !empty() && from >= start && to <= end(); }

  std::optional<double> try_at(Timestamp t) const {
    if (empty() || t < start || t >= end()) return std::nullopt;
    return values[static_cast<std::size_t>((t - start) / step)];
  }

  double at(Timestamp t) const {
    if (auto v = try_at(t)) return *v;
    throw DataGapError("no data", t, t + step);
  }
};

}  // namespace hems
