#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hems/sim/types.hpp"

namespace hems {

enum class Ems { RlStub, Rbc, TreeC, Mpc };

inline constexpr int kEmsCount = 4;
inline constexpr int kHouseCount = 4;
inline constexpr int kScheduleDays = 48;

const char* ems_name(Ems e);
std::optional<Ems> ems_from_name(std::string_view name);

// EMS per house for one day; index 0 is house 1.
using DayAssignment = std::array<Ems, kHouseCount>;

struct Schedule {
  std::vector<DayAssignment> days;

  bool operator==(const Schedule&) const = default;
};

// True when no house runs the RL stub or the MPC on both days.
bool compatible(const DayAssignment& a, const DayAssignment& b);

// Human-readable violations of the protocol; empty for a valid schedule.
std::vector<std::string> schedule_violations(const Schedule& s);

class ScheduleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two distinct 24-day halves, each using every EMS-to-house permutation once,
// consecutive-day rule holding across the whole 48 days. Deterministic per seed.
Schedule generate_schedule(std::uint64_t seed, int max_attempts = 10000);

// CSV "day,house1,house2,house3,house4".
std::string schedule_to_csv(const Schedule& s);
Schedule parse_schedule_csv(std::string_view text);

struct SessionAdjustment {
  std::vector<EvSession> sessions;
  std::vector<EvSession> dropped;  // no positive-length segment left
};

// Sessions crossing a switch instant are cut to their longest segment between
// switch instants; ties keep the earlier segment. SOC values are kept.
SessionAdjustment adjust_sessions(const std::vector<EvSession>& sessions, int switch_hour = 15);

}  // namespace hems
