#pragma once

#include <limits>
#include <string>
#include <vector>

namespace hems::mathprog {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, GreaterEqual, Equal };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  double cost = 0.0;
  bool binary = false;
};

// lower <= sum(coef * x) <= upper
struct Row {
  std::string name;
  std::vector<Term> terms;
  double lower = -kInfinity;
  double upper = kInfinity;
};

// Minimization problem with bounded variables, ranged rows and optional binaries.
class LinearProgram {
 public:
  int add_variable(std::string name, double lower, double upper, double cost = 0.0);
  int add_binary(std::string name, double cost = 0.0);
  int add_row(std::string name, std::vector<Term> terms, RowSense sense, double rhs);
  int add_range(std::string name, std::vector<Term> terms, double lower, double upper);

  void set_bounds(int var, double lower, double upper);
  void set_cost(int var, double cost) { vars_.at(static_cast<std::size_t>(var)).cost = cost; }
  void set_objective_constant(double c) { objective_constant_ = c; }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Row>& rows() const { return rows_; }
  double objective_constant() const { return objective_constant_; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }

  void validate() const;
  double objective(const std::vector<double>& x) const;
  // Largest bound or row violation of x.
  double max_violation(const std::vector<double>& x) const;

  // CPLEX-style LP text, for debugging dumps.
  std::string to_lp_text() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Row> rows_;
  double objective_constant_ = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(SolveStatus s);

struct SolverOptions {
  int max_iterations = 200000;
  int max_nodes = 20000;
  double feasibility_tol = 1e-6;
  double integrality_tol = 1e-6;
  double relative_gap = 1e-6;
};

struct MipSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = kInfinity;
  std::vector<double> values;
  double gap = kInfinity;  // relative; 0 when proven optimal
  int nodes = 0;
  int iterations = 0;
};

// Relaxation: binaries are treated as continuous in [0, 1].
MipSolution solve_lp(const LinearProgram& lp, const SolverOptions& options = {});

// Best-first branch-and-bound on the binaries.
MipSolution solve_milp(const LinearProgram& lp, const SolverOptions& options = {});

}  // namespace hems::mathprog
