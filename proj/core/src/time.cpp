#include "hems/time.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hems {

using namespace std::chrono;

Timestamp make_time(int year_, unsigned month_, unsigned day_, int hour, int minute, int second) {
  const year_month_day ymd{year{year_}, month{month_}, day{day_}};
  if (!ymd.ok()) throw std::invalid_argument("make_time: invalid calendar date");
  return sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second};
}

double hour_of_day(Timestamp t) {
  const auto since_midnight = t - floor<days>(t);
  return static_cast<double>(since_midnight.count()) / 3600.0;
}

int day_of_week(Timestamp t) {
  const weekday wd{floor<days>(t)};
  return static_cast<int>(wd.iso_encoding()) - 1;
}

year_month year_month_of(Timestamp t) {
  const year_month_day ymd{floor<days>(t)};
  return ymd.year() / ymd.month();
}

int days_in_month(year_month ym) {
  return static_cast<int>(static_cast<unsigned>(year_month_day_last{ym / last}.day()));
}

int days_in_year(year y) { return y.is_leap() ? 366 : 365; }

Timestamp next_switch(Timestamp t, int switch_hour) {
  Timestamp candidate = floor<days>(t) + hours{switch_hour};
  if (candidate <= t) candidate += days{1};
  return candidate;
}

Timestamp previous_switch(Timestamp t, int switch_hour) {
  Timestamp candidate = floor<days>(t) + hours{switch_hour};
  if (candidate > t) candidate -= days{1};
  return candidate;
}

Timestamp floor_to(Timestamp t, Seconds step) {
  const auto count = t.time_since_epoch().count();
  const auto s = step.count();
  auto q = count / s;
  if (count % s != 0 && count < 0) --q;
  return Timestamp{Seconds{q * s}};
}

std::string format_iso(Timestamp t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

namespace {

int parse_digits(std::string_view s, std::size_t pos, std::size_t n, std::string_view whole) {
  if (pos + n > s.size()) throw std::invalid_argument("malformed timestamp: " + std::string(whole));
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9')
      throw std::invalid_argument("malformed timestamp: " + std::string(whole));
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

Timestamp parse_iso(std::string_view text, int local_offset_minutes) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r'))
    text.remove_suffix(1);
  const auto bad = [&] { return std::invalid_argument("malformed timestamp: " + std::string(text)); };
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':')
    throw bad();
  const int y = parse_digits(text, 0, 4, text);
  const int mo = parse_digits(text, 5, 2, text);
  const int d = parse_digits(text, 8, 2, text);
  const int h = parse_digits(text, 11, 2, text);
  const int mi = parse_digits(text, 14, 2, text);
  std::size_t pos = 16;
  int sec = 0;
  if (pos < text.size() && text[pos] == ':') {
    sec = parse_digits(text, pos + 1, 2, text);
    pos += 3;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
    }
  }
  if (h > 23 || mi > 59 || sec > 60) throw bad();
  Timestamp t;
  try {
    t = make_time(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, sec);
  } catch (const std::invalid_argument&) {
    throw bad();
  }
  if (pos == text.size()) return t;
  int offset_minutes = 0;
  if (text[pos] == 'Z') {
    ++pos;
  } else if (text[pos] == '+' || text[pos] == '-') {
    const int sign = text[pos] == '+' ? 1 : -1;
    const int oh = parse_digits(text, pos + 1, 2, text);
    std::size_t mpos = pos + 3;
    if (mpos < text.size() && text[mpos] == ':') ++mpos;
    const int om = parse_digits(text, mpos, 2, text);
    offset_minutes = sign * (oh * 60 + om);
    pos = mpos + 2;
  } else {
    throw bad();
  }
  if (pos != text.size()) throw bad();
  return t - minutes{offset_minutes} + minutes{local_offset_minutes};
}

}  // namespace hems
