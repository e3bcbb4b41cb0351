#include <cstdarg>
#include <cstdio>
#include <sstream>

#include "hems/harness/experiment.hpp"
#include "hems/harness/io.hpp"

namespace hems {

namespace {

std::string fmt(const char* f, ...) {
  char buf[256];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// Keeps error messages inside a single CSV cell.
std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s;
}

constexpr const char* kCsvHeader =
    "day,start,house,ems,status,ie_day_ahead,ie_offtake_extras,ie_peak,ie_yearly,ie_total,"
    "net_day_ahead,net_offtake_extras,net_peak,net_yearly,net_total,imported_kwh,exported_kwh,"
    "safety_activations,fallback_uses,degraded_steps,exceedance_wh,sessions,sessions_reached,error";

std::string costs_csv(const CostBreakdown& c) {
  return fmt("%.2f,%.2f,%.2f,%.2f,%.2f", c.day_ahead, c.offtake_extras, c.peak, c.yearly, c.total);
}

std::string render_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : report.days) {
    os << r.day << ',' << format_iso(r.start) << ',' << r.house << ',' << r.ems << ',' << (r.ok ? "ok" : "failed")
       << ',' << costs_csv(r.import_export) << ',' << costs_csv(r.net) << ','
       << fmt("%.3f,%.3f,%d,%d,%d,%.1f,%d,%d", r.imported_kwh, r.exported_kwh, r.safety_activations, r.fallback_uses,
              r.degraded_steps, r.exceedance_wh, r.sessions, r.sessions_reached)
       << ',' << sanitize(r.error) << '\n';
  }
  return os.str();
}

std::string render_text(const ExperimentReport& report) {
  std::ostringstream os;
  const auto summary = report.summary();
  const auto cost_table = [&](const char* title, bool net) {
    os << title << '\n';
    os << fmt("%-8s %5s %7s %10s %10s %10s %10s %10s\n", "EMS", "days", "failed", "day-ahead", "extras", "peak",
              "yearly", "total");
    for (const auto& s : summary) {
      const auto& c = net ? s.net : s.import_export;
      os << fmt("%-8s %5d %7d %10.2f %10.2f %10.2f %10.2f %10.2f\n", s.ems.c_str(), s.days, s.failed_days,
                c.day_ahead, c.offtake_extras, c.peak, c.yearly, c.total);
    }
    os << '\n';
  };
  cost_table("Costs, import/export billing [EUR]", false);
  cost_table("Costs, net-consumption billing [EUR]", true);

  os << "Energy and safety\n";
  os << fmt("%-8s %13s %13s %11s %10s %9s %15s %9s\n", "EMS", "imported_kWh", "exported_kWh", "net_kWh",
            "safety", "fallback", "exceedance_Wh", "sessions");
  for (const auto& s : summary)
    os << fmt("%-8s %13.3f %13.3f %11.3f %10d %9d %15.1f %5d/%-3d\n", s.ems.c_str(), s.imported_kwh, s.exported_kwh,
              s.net_kwh(), s.safety_activations, s.fallback_uses, s.exceedance_wh, s.sessions_reached, s.sessions);
  os << '\n';

  bool any_reference = false;
  for (const auto& s : summary) any_reference = any_reference || s.matched_days > 0;
  if (any_reference) {
    os << "Compared with MPC-P on the same days and houses [EUR]\n";
    os << fmt("%-8s %8s %10s %10s %10s\n", "EMS", "matched", "EMS", "MPC-P", "delta");
    for (const auto& s : summary) {
      if (s.ems == kMpcPerfectName) continue;
      os << fmt("%-8s %8d %10.2f %10.2f %10.2f\n", s.ems.c_str(), s.matched_days, s.matched_total,
                s.matched_reference_total, s.matched_total - s.matched_reference_total);
    }
    os << '\n';
  }

  os << "Per day\n";
  os << fmt("%4s %-19s %5s %-8s %10s %10s %10s %15s  %s\n", "day", "start", "house", "EMS", "total", "net_total",
            "vs_MPC-P", "exceedance_Wh", "status");
  for (const auto& r : report.days) {
    if (r.ems == kMpcPerfectName) continue;
    const auto* ref = report.reference_for(r);
    const std::string delta =
        r.ok && ref && ref->ok ? fmt("%10.2f", r.import_export.total - ref->import_export.total) : fmt("%10s", "-");
    os << fmt("%4d %-19s %5d %-8s %10.2f %10.2f %s %15.1f  %s\n", r.day, format_iso(r.start).c_str(), r.house,
              r.ems.c_str(), r.import_export.total, r.net.total, delta.c_str(), r.exceedance_wh,
              r.ok ? "ok" : ("failed: " + r.error).c_str());
  }
  return os.str();
}

std::vector<std::string> split(const std::string& line, std::size_t max_cells) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (cells.size() + 1 < max_cells) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) break;
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  cells.push_back(line.substr(start));
  return cells;
}

}  // namespace

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  return format == ReportFormat::Csv ? render_csv(report) : render_text(report);
}

ExperimentReport parse_report_csv(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw InputError("report CSV: bad header");
  ExperimentReport report;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split(line, 24);
    const auto at = "report CSV line " + std::to_string(lineno) + ": ";
    if (c.size() != 24) throw InputError(at + "expected 24 columns");
    try {
      DayRecord r;
      std::size_t i = 0;
      r.day = std::stoi(c[i++]);
      r.start = parse_iso(c[i++]);
      r.house = std::stoi(c[i++]);
      r.ems = c[i++];
      const auto& status = c[i++];
      if (status != "ok" && status != "failed") throw InputError(at + "bad status " + status);
      r.ok = status == "ok";
      for (CostBreakdown* cb : {&r.import_export, &r.net}) {
        cb->day_ahead = std::stod(c[i++]);
        cb->offtake_extras = std::stod(c[i++]);
        cb->peak = std::stod(c[i++]);
        cb->yearly = std::stod(c[i++]);
        cb->total = std::stod(c[i++]);
      }
      r.imported_kwh = std::stod(c[i++]);
      r.exported_kwh = std::stod(c[i++]);
      r.safety_activations = std::stoi(c[i++]);
      r.fallback_uses = std::stoi(c[i++]);
      r.degraded_steps = std::stoi(c[i++]);
      r.exceedance_wh = std::stod(c[i++]);
      r.sessions = std::stoi(c[i++]);
      r.sessions_reached = std::stoi(c[i++]);
      r.error = c[i++];
      report.days.push_back(r);
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(at + e.what());
    }
  }
  return report;
}

}  // namespace hems
