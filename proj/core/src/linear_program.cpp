#include "hems/mathprog/linear_program.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hems::mathprog {

int LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
  vars_.push_back(Variable{std::move(name), lower, upper, cost, false});
  return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::add_binary(std::string name, double cost) {
  vars_.push_back(Variable{std::move(name), 0.0, 1.0, cost, true});
  return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::add_row(std::string name, std::vector<Term> terms, RowSense sense, double rhs) {
  switch (sense) {
    case RowSense::LessEqual:
      return add_range(std::move(name), std::move(terms), -kInfinity, rhs);
    case RowSense::GreaterEqual:
      return add_range(std::move(name), std::move(terms), rhs, kInfinity);
    case RowSense::Equal:
      break;
  }
  return add_range(std::move(name), std::move(terms), rhs, rhs);
}

int LinearProgram::add_range(std::string name, std::vector<Term> terms, double lower, double upper) {
  rows_.push_back(Row{std::move(name), std::move(terms), lower, upper});
  return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
  auto& v = vars_.at(static_cast<std::size_t>(var));
  v.lower = lower;
  v.upper = upper;
}

void LinearProgram::validate() const {
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper)
      throw std::invalid_argument("variable " + v.name + ": inconsistent bounds");
    if (!std::isfinite(v.cost)) throw std::invalid_argument("variable " + v.name + ": non-finite cost");
  }
  for (const auto& r : rows_) {
    if (std::isnan(r.lower) || std::isnan(r.upper) || r.lower > r.upper)
      throw std::invalid_argument("row " + r.name + ": inconsistent bounds");
    for (const auto& t : r.terms) {
      if (t.var < 0 || t.var >= num_variables())
        throw std::invalid_argument("row " + r.name + ": variable index out of range");
      if (!std::isfinite(t.coef)) throw std::invalid_argument("row " + r.name + ": non-finite coefficient");
    }
  }
}

double LinearProgram::objective(const std::vector<double>& x) const {
  double obj = objective_constant_;
  for (std::size_t j = 0; j < vars_.size(); ++j) obj += vars_[j].cost * x[j];
  return obj;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max(worst, vars_[j].lower - x[j]);
    worst = std::max(worst, x[j] - vars_[j].upper);
  }
  for (const auto& r : rows_) {
    double act = 0.0;
    for (const auto& t : r.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
    worst = std::max(worst, r.lower - act);
    worst = std::max(worst, act - r.upper);
  }
  return worst;
}

namespace {

std::string var_name(const LinearProgram& lp, int j) {
  const auto& n = lp.variables()[static_cast<std::size_t>(j)].name;
  return n.empty() ? "x" + std::to_string(j) : n;
}

void write_terms(std::ostringstream& os, const LinearProgram& lp, const std::vector<Term>& terms) {
  bool first = true;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    os << (t.coef < 0 ? (first ? "-" : " - ") : (first ? "" : " + ")) << std::abs(t.coef) << " "
       << var_name(lp, t.var);
    first = false;
  }
  if (first) os << "0";
}

}  // namespace

std::string LinearProgram::to_lp_text() const {
  std::ostringstream os;
  os.precision(12);
  os << "Minimize\n obj: ";
  std::vector<Term> obj;
  for (int j = 0; j < num_variables(); ++j)
    if (vars_[static_cast<std::size_t>(j)].cost != 0.0) obj.push_back({j, vars_[static_cast<std::size_t>(j)].cost});
  write_terms(os, *this, obj);
  if (objective_constant_ != 0.0) os << " + " << objective_constant_ << " constant";
  os << "\nSubject To\n";
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    const std::string name = r.name.empty() ? "c" + std::to_string(i) : r.name;
    if (r.lower == r.upper) {
      os << " " << name << ": ";
      write_terms(os, *this, r.terms);
      os << " = " << r.upper << "\n";
      continue;
    }
    if (std::isfinite(r.lower)) {
      os << " " << name << (std::isfinite(r.upper) ? "_lo" : "") << ": ";
      write_terms(os, *this, r.terms);
      os << " >= " << r.lower << "\n";
    }
    if (std::isfinite(r.upper)) {
      os << " " << name << (std::isfinite(r.lower) ? "_hi" : "") << ": ";
      write_terms(os, *this, r.terms);
      os << " <= " << r.upper << "\n";
    }
  }
  os << "Bounds\n";
  for (int j = 0; j < num_variables(); ++j) {
    const auto& v = vars_[static_cast<std::size_t>(j)];
    if (v.binary) continue;
    if (!std::isfinite(v.lower) && !std::isfinite(v.upper)) {
      os << " " << var_name(*this, j) << " free\n";
    } else {
      os << " " << (std::isfinite(v.lower) ? std::to_string(v.lower) : std::string("-inf")) << " <= "
         << var_name(*this, j) << " <= " << (std::isfinite(v.upper) ? std::to_string(v.upper) : std::string("+inf"))
         << "\n";
    }
  }
  bool any_binary = false;
  for (int j = 0; j < num_variables(); ++j) {
    if (!vars_[static_cast<std::size_t>(j)].binary) continue;
    if (!any_binary) os << "Binaries\n";
    any_binary = true;
    os << " " << var_name(*this, j) << "\n";
  }
  os << "End\n";
  return os.str();
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::Unbounded:
      return "unbounded";
    case SolveStatus::IterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

}  // namespace hems::mathprog
