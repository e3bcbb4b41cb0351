#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace hems {

using Seconds = std::chrono::seconds;

// Wall-clock time in the experiment's fixed local offset. Calendar queries
// (hour, weekday, month) are taken directly from this value.
using Timestamp = std::chrono::sys_seconds;

inline constexpr Seconds kEmsStep{900};
inline constexpr double kEmsStepHours = 0.25;

inline double to_hours(Seconds d) { return static_cast<double>(d.count()) / 3600.0; }

Timestamp make_time(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                    int second = 0);

double hour_of_day(Timestamp t);       // fractional, [0, 24)
int day_of_week(Timestamp t);          // 0 = Monday ... 6 = Sunday
std::chrono::year_month year_month_of(Timestamp t);
int days_in_month(std::chrono::year_month ym);
int days_in_year(std::chrono::year y);

// First switch instant strictly after t.
Timestamp next_switch(Timestamp t, int switch_hour);
// Last switch instant at or before t.
Timestamp previous_switch(Timestamp t, int switch_hour);

Timestamp floor_to(Timestamp t, Seconds step);

// "YYYY-MM-DDTHH:MM:SS"
std::string format_iso(Timestamp t);

// Accepts "YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]". An explicit offset is
// converted to `local_offset_minutes`; a bare timestamp is taken as local.
Timestamp parse_iso(std::string_view text, int local_offset_minutes = 0);

}  // namespace hems
