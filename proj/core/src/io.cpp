#include "hems/harness/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>

namespace hems {

namespace {

std::string where(const std::string& source, int line) { return source + ":" + std::to_string(line) + ": "; }

std::string trim(std::string s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '"'; };
  while (!s.empty() && !not_space(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && !not_space(s[i])) ++i;
  return s.substr(i);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_number(const std::string& cell, const std::string& at) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw InputError(at + "not a number: '" + cell + "'");
  return v;
}

Timestamp parse_time(const std::string& cell, const LoadOptions& o, const std::string& at) {
  try {
    return parse_iso(cell, o.local_offset_minutes) + std::chrono::days(o.shift_days);
  } catch (const std::invalid_argument& e) {
    throw InputError(at + e.what());
  }
}

void expect_header(std::istream& in, const std::string& header, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty file");
  if (trim(line) != header) throw InputError(source + ":1: expected header '" + header + "'");
}

std::ifstream open(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError(path + ": cannot open file");
  return f;
}

}  // namespace

TimeSeries parse_timeseries(std::istream& in, SeriesKind kind, const LoadOptions& options, const std::string& source) {
  expect_header(in, "timestamp,value", source);
  std::vector<std::pair<Timestamp, double>> rows;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto at = where(source, lineno);
    const auto cells = split_csv(line);
    if (cells.size() != 2) throw InputError(at + "expected 2 columns");
    const Timestamp t = parse_time(cells[0], options, at);
    const double v = parse_number(cells[1], at);
    if (!rows.empty() && t <= rows.back().first)
      throw InputError(at + "timestamp " + format_iso(t) + " not after " + format_iso(rows.back().first));
    rows.emplace_back(t, v);
  }
  if (rows.empty()) throw InputError(source + ": no data rows");

  TimeSeries out;
  out.step = kEmsStep;
  out.start = floor_to(rows.front().first, kEmsStep);

  if (kind == SeriesKind::Price) {
    for (const auto& [t, v] : rows)
      if (floor_to(t, kEmsStep) != t) throw InputError(source + ": price timestamp " + format_iso(t) + " not on the 15-minute grid");
    Seconds native = kEmsStep * 4;
    if (rows.size() > 1) {
      native = rows[1].first - rows[0].first;
      for (std::size_t i = 1; i < rows.size(); ++i) native = std::min(native, rows[i].first - rows[i - 1].first);
    }
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].first - rows[i - 1].first > native)
        throw DataGapError(source + ": price gap", rows[i - 1].first + native, rows[i].first);
    const Timestamp end = rows.back().first + native;
    std::size_t r = 0;
    for (Timestamp t = out.start; t < end; t += kEmsStep) {
      while (r + 1 < rows.size() && rows[r + 1].first <= t) ++r;
      out.values.push_back(rows[r].second);
    }
    return out;
  }

  const Timestamp end = floor_to(rows.back().first, kEmsStep) + kEmsStep;
  const auto bins = static_cast<std::size_t>((end - out.start) / kEmsStep);
  std::vector<double> sum(bins, 0.0);
  std::vector<int> count(bins, 0);
  for (const auto& [t, v] : rows) {
    const auto b = static_cast<std::size_t>((t - out.start) / kEmsStep);
    sum[b] += v / 1000.0;
    ++count[b];
  }
  out.values.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] > 0) {
      out.values[b] = sum[b] / count[b];
      continue;
    }
    const bool single = b > 0 && b + 1 < bins && count[b - 1] > 0 && count[b + 1] > 0;
    if (!single) {
      std::size_t e = b;
      while (e < bins && count[e] == 0) ++e;
      throw DataGapError(source + ": data gap", out.time_at(b), out.time_at(e));
    }
    out.values[b] = 0.5 * (sum[b - 1] / count[b - 1] + sum[b + 1] / count[b + 1]);
  }
  return out;
}

TimeSeries load_timeseries(const std::string& path, SeriesKind kind, const LoadOptions& options) {
  auto f = open(path);
  return parse_timeseries(f, kind, options, path);
}

std::vector<EvSession> parse_sessions(std::istream& in, const LoadOptions& options, const std::string& source) {
  expect_header(in, "arrival,departure,soc_start,soc_goal", source);
  std::vector<EvSession> out;
  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto at = where(source, lineno);
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw InputError(at + "expected 4 columns");
    EvSession s;
    s.arrival = parse_time(cells[0], options, at);
    s.departure = parse_time(cells[1], options, at);
    s.soc_start = parse_number(cells[2], at);
    s.soc_goal = parse_number(cells[3], at);
    try {
      s.validate();
    } catch (const std::exception& e) {
      throw InputError(at + e.what());
    }
    if (!out.empty() && s.arrival < out.back().departure)
      throw InputError(at + "session overlaps the previous one (" + format_iso(s.arrival) + " < " +
                       format_iso(out.back().departure) + ")");
    out.push_back(s);
  }
  return out;
}

std::vector<EvSession> load_sessions(const std::string& path, const LoadOptions& options) {
  auto f = open(path);
  return parse_sessions(f, options, path);
}

std::string format_iso_offset(Timestamp t, int offset_minutes) {
  char buf[16];
  const int a = std::abs(offset_minutes);
  std::snprintf(buf, sizeof buf, "%c%02d:%02d", offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
  return format_iso(t) + buf;
}

void write_timeseries(std::ostream& out, const TimeSeries& series, SeriesKind kind, int offset_minutes) {
  const double scale = kind == SeriesKind::Price ? 1.0 : 1000.0;
  out << "timestamp,value\n";
  char buf[64];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", series.values[i] * scale);
    out << format_iso_offset(series.time_at(i), offset_minutes) << ',' << buf << '\n';
  }
}

void write_sessions(std::ostream& out, const std::vector<EvSession>& sessions, int offset_minutes) {
  out << "arrival,departure,soc_start,soc_goal\n";
  char buf[64];
  for (const auto& s : sessions) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g", s.soc_start, s.soc_goal);
    out << format_iso_offset(s.arrival, offset_minutes) << ',' << format_iso_offset(s.departure, offset_minutes) << ','
        << buf << '\n';
  }
}

void write_trace(std::ostream& out, const std::vector<StepTrace>& steps) {
  out << "time,load_kw,pv_kw,ev_kw,bess_kw,grid_kw,imported_kwh,exported_kwh,bess_soc,ev_soc,safety,fallback,"
         "enforced_bess,enforced_ev,exceedance_kwh\n";
  char buf[256];
  for (const auto& s : steps) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,", s.load_kw, s.pv_kw, s.ev_kw, s.bess_kw,
                  s.grid_kw, s.imported_kwh, s.exported_kwh, s.bess_soc);
    out << format_iso(s.time) << ',' << buf;
    if (s.ev_soc) {
      std::snprintf(buf, sizeof buf, "%.6f", *s.ev_soc);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%d,%d,%d,%d,%.9f\n", s.safety_activated, s.fallback_used, s.enforced_bess,
                  s.enforced_ev, s.exceedance_kwh);
    out << buf;
  }
}

}  // namespace hems
