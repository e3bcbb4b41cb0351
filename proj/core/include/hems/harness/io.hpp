#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "hems/series.hpp"
#include "hems/sim/types.hpp"

namespace hems {

// Malformed or inconsistent input file.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SeriesKind { Load, Pv, Price, Reactive };

struct LoadOptions {
  int local_offset_minutes = 0;  // offset of the experiment's wall clock
  int shift_days = 0;            // added to every timestamp, e.g. to align weekdays
};

// CSV "timestamp,value". Load, PV (W) and reactive power (var) are converted to kW/kvar
// and averaged onto the 15-minute grid; a single empty 15-minute bin is filled from
// its neighbours, longer gaps are errors. Prices (EUR/kWh) are held until the next row.
TimeSeries parse_timeseries(std::istream& in, SeriesKind kind, const LoadOptions& options = {},
                            const std::string& source = "<input>");
TimeSeries load_timeseries(const std::string& path, SeriesKind kind, const LoadOptions& options = {});

// CSV "arrival,departure,soc_start,soc_goal".
std::vector<EvSession> parse_sessions(std::istream& in, const LoadOptions& options = {},
                                      const std::string& source = "<input>");
std::vector<EvSession> load_sessions(const std::string& path, const LoadOptions& options = {});

std::string format_iso_offset(Timestamp t, int offset_minutes);

// Inverse writers; load/PV/reactive values are written in W/var.
void write_timeseries(std::ostream& out, const TimeSeries& series, SeriesKind kind, int offset_minutes = 0);
void write_sessions(std::ostream& out, const std::vector<EvSession>& sessions, int offset_minutes = 0);

// Per-step simulation trace as CSV.
void write_trace(std::ostream& out, const std::vector<StepTrace>& steps);

}  // namespace hems
