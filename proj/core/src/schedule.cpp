#include "hems/harness/schedule.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace hems {

const char* ems_name(Ems e) {
  switch (e) {
    case Ems::RlStub:
      return "RL-stub";
    case Ems::Rbc:
      return "RBC";
    case Ems::TreeC:
      return "TreeC";
    case Ems::Mpc:
      return "MPC";
  }
  return "?";
}

std::optional<Ems> ems_from_name(std::string_view name) {
  for (Ems e : {Ems::RlStub, Ems::Rbc, Ems::TreeC, Ems::Mpc})
    if (name == ems_name(e)) return e;
  return std::nullopt;
}

bool compatible(const DayAssignment& a, const DayAssignment& b) {
  for (int h = 0; h < kHouseCount; ++h) {
    const auto i = static_cast<std::size_t>(h);
    if (a[i] == b[i] && (a[i] == Ems::RlStub || a[i] == Ems::Mpc)) return false;
  }
  return true;
}

namespace {

std::vector<DayAssignment> all_permutations() {
  std::vector<DayAssignment> out;
  DayAssignment p{Ems::RlStub, Ems::Rbc, Ems::TreeC, Ems::Mpc};
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

bool is_permutation_day(const DayAssignment& d) {
  std::array<int, kEmsCount> seen{};
  for (Ems e : d) ++seen[static_cast<std::size_t>(e)];
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

}  // namespace

std::vector<std::string> schedule_violations(const Schedule& s) {
  std::vector<std::string> out;
  if (s.days.size() != static_cast<std::size_t>(kScheduleDays))
    out.push_back("schedule has " + std::to_string(s.days.size()) + " days, expected 48");
  std::map<std::pair<int, Ems>, int> combos;
  for (std::size_t d = 0; d < s.days.size(); ++d) {
    if (!is_permutation_day(s.days[d])) out.push_back("day " + std::to_string(d) + " repeats an EMS");
    for (int h = 0; h < kHouseCount; ++h) ++combos[{h, s.days[d][static_cast<std::size_t>(h)]}];
    if (d > 0 && !compatible(s.days[d - 1], s.days[d]))
      out.push_back("days " + std::to_string(d - 1) + " and " + std::to_string(d) +
                    " give a house the same RL or MPC EMS");
  }
  const int expected = static_cast<int>(s.days.size()) / kEmsCount;
  for (int h = 0; h < kHouseCount; ++h)
    for (Ems e : {Ems::RlStub, Ems::Rbc, Ems::TreeC, Ems::Mpc}) {
      const auto it = combos.find({h, e});
      const int n = it == combos.end() ? 0 : it->second;
      if (n != expected)
        out.push_back("house " + std::to_string(h + 1) + " runs " + ems_name(e) + " on " + std::to_string(n) +
                      " days, expected " + std::to_string(expected));
    }
  if (s.days.size() == static_cast<std::size_t>(kScheduleDays)) {
    for (int half = 0; half < 2; ++half) {
      auto first = s.days.begin() + half * 24;
      std::vector<DayAssignment> h(first, first + 24);
      std::sort(h.begin(), h.end());
      if (std::adjacent_find(h.begin(), h.end()) != h.end())
        out.push_back("half " + std::to_string(half + 1) + " repeats a permutation");
    }
    if (std::equal(s.days.begin(), s.days.begin() + 24, s.days.begin() + 24))
      out.push_back("both halves are identical");
  }
  return out;
}

namespace {

// Randomized depth-first search for an ordering of all 24 permutations that
// follows `previous`; gives up after `budget` node expansions.
bool order_half(const std::vector<DayAssignment>& perms, const DayAssignment* previous, std::mt19937_64& rng,
                std::vector<DayAssignment>& out, long& budget) {
  const std::size_t n = perms.size();
  std::vector<bool> used(n, false);
  std::vector<std::vector<std::size_t>> choices;
  std::vector<std::size_t> cursor;
  std::vector<std::size_t> path;

  auto candidates = [&](const DayAssignment* prev) {
    std::vector<std::size_t> c;
    for (std::size_t i = 0; i < n; ++i)
      if (!used[i] && (!prev || compatible(*prev, perms[i]))) c.push_back(i);
    std::shuffle(c.begin(), c.end(), rng);
    return c;
  };

  choices.push_back(candidates(previous));
  cursor.push_back(0);
  while (!choices.empty()) {
    if (--budget < 0) return false;
    auto& level = choices.back();
    auto& pos = cursor.back();
    if (pos >= level.size()) {
      choices.pop_back();
      cursor.pop_back();
      if (!path.empty()) {
        used[path.back()] = false;
        path.pop_back();
      }
      continue;
    }
    const std::size_t pick = level[pos++];
    used[pick] = true;
    path.push_back(pick);
    if (path.size() == n) {
      out.clear();
      for (std::size_t i : path) out.push_back(perms[i]);
      return true;
    }
    choices.push_back(candidates(&perms[pick]));
    cursor.push_back(0);
  }
  return false;
}

}  // namespace

Schedule generate_schedule(std::uint64_t seed, int max_attempts) {
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
  const auto perms = all_permutations();
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    long budget = 20000;
    std::vector<DayAssignment> first, second;
    if (!order_half(perms, nullptr, rng, first, budget)) continue;
    if (!order_half(perms, &first.back(), rng, second, budget)) continue;
    if (first == second) continue;
    Schedule s;
    s.days = first;
    s.days.insert(s.days.end(), second.begin(), second.end());
    return s;
  }
  throw ScheduleError("no valid schedule found within " + std::to_string(max_attempts) + " attempts");
}

std::string schedule_to_csv(const Schedule& s) {
  std::ostringstream os;
  os << "day,house1,house2,house3,house4\n";
  for (std::size_t d = 0; d < s.days.size(); ++d) {
    os << d;
    for (Ems e : s.days[d]) os << ',' << ems_name(e);
    os << '\n';
  }
  return os.str();
}

Schedule parse_schedule_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != "day,house1,house2,house3,house4")
    throw std::invalid_argument("schedule CSV: bad header");
  Schedule s;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    if (cell != std::to_string(s.days.size()))
      throw std::invalid_argument("schedule CSV line " + std::to_string(lineno) + ": day index out of sequence");
    DayAssignment day{};
    for (int h = 0; h < kHouseCount; ++h) {
      if (!std::getline(ls, cell, ','))
        throw std::invalid_argument("schedule CSV line " + std::to_string(lineno) + ": missing column");
      const auto e = ems_from_name(cell);
      if (!e) throw std::invalid_argument("schedule CSV line " + std::to_string(lineno) + ": unknown EMS " + cell);
      day[static_cast<std::size_t>(h)] = *e;
    }
    s.days.push_back(day);
  }
  return s;
}

SessionAdjustment adjust_sessions(const std::vector<EvSession>& sessions, int switch_hour) {
  SessionAdjustment out;
  for (const auto& s : sessions) {
    Timestamp best_from = s.arrival;
    Timestamp best_to = s.arrival;
    Timestamp from = s.arrival;
    while (from < s.departure) {
      const Timestamp to = std::min(next_switch(from, switch_hour), s.departure);
      if (to - from > best_to - best_from) {
        best_from = from;
        best_to = to;
      }
      from = to;
    }
    if (best_to <= best_from) {
      out.dropped.push_back(s);
      continue;
    }
    EvSession cut = s;
    cut.arrival = best_from;
    cut.departure = best_to;
    out.sessions.push_back(cut);
  }
  return out;
}

}  // namespace hems
