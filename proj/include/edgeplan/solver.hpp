#pragma once

#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace edgeplan {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { kLessEqual, kGreaterEqual, kEqual };
enum class ObjSense { kMinimize, kMaximize };

struct Term {
  int var;
  double coef;
};

/// Affine expression over model variables.
struct LinExpr {
  std::vector<Term> terms;
  double constant = 0.0;

  LinExpr& add(int var, double coef) {
    if (coef != 0.0) terms.push_back({var, coef});
    return *this;
  }
  LinExpr& add(const LinExpr& other, double scale = 1.0);
  LinExpr& operator+=(double c) {
    constant += c;
    return *this;
  }
  double evaluate(const std::vector<double>& values) const;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  bool integer = false;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

struct Objective {
  ObjSense sense = ObjSense::kMinimize;
  std::vector<Term> terms;
  double constant = 0.0;
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Solver-agnostic MILP/LP. Names are unique per kind; terms reference
/// variables by index.
class LinearModel {
 public:
  int add_variable(std::string name, double lower, double upper, bool integer = false);
  int add_binary(std::string name) { return add_variable(std::move(name), 0.0, 1.0, true); }
  int add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs);
  /// Moves the expression constant to the right-hand side.
  int add_constraint(std::string name, const LinExpr& lhs, Sense sense, double rhs);

  void set_objective(ObjSense sense, const LinExpr& expr);
  void set_bounds(int var, double lower, double upper);

  int num_variables() const { return static_cast<int>(variables_.size()); }
  int num_constraints() const { return static_cast<int>(constraints_.size()); }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Objective& objective() const { return objective_; }
  const Variable& variable(int idx) const { return variables_.at(idx); }

  std::optional<int> find_variable(std::string_view name) const;
  std::optional<int> find_constraint(std::string_view name) const;
  int variable_index(std::string_view name) const;
  int constraint_index(std::string_view name) const;

  bool has_integers() const;
  /// Structural problems (bad indices, inverted bounds, non-finite data).
  std::vector<std::string> check() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Constraint> constraints_;
  Objective objective_;
  std::unordered_map<std::string, int> var_index_;
  std::unordered_map<std::string, int> row_index_;
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kInfeasibleOrUnbounded,
  kGapLimit,
  kTimeLimit,
};

std::string to_string(SolveStatus status);

struct SolverParams {
  double rel_gap = 1e-9;
  double time_limit = kInf;  // seconds
  int seed = 0;
  bool verbose = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kInfeasible;
  double objective = 0.0;
  std::vector<double> values;  // by variable index
  std::vector<double> duals;   // by constraint index, pure LPs only; d objective / d rhs
  double mip_gap = 0.0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
  bool has_solution() const { return !values.empty(); }
  double value(const LinearModel& model, std::string_view name) const;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

SolveResult solve(const LinearModel& model, const SolverParams& params = {});

/// Reads an LP or MPS file with the backend's own parser and solves it.
/// Values are indexed by the file's column order.
SolveResult solve_file(const std::string& path, const SolverParams& params = {});

/// Fixes every integer variable at its rounded value from `incumbent` and
/// re-solves the remaining LP. Removes integrality noise from MILP solutions.
SolveResult polish_integers(const LinearModel& model, const SolveResult& incumbent,
                            const SolverParams& params = {});

enum class ExportFormat { kLp, kMps };

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic text rendering of the model. LP output keeps sanitized
/// names; fixed MPS uses 8-character generated names and lists the original
/// names in comment lines.
std::string export_model(const LinearModel& model, ExportFormat format);

struct DualModel {
  LinearModel model;  // maximization
  /// Primal constraint index -> dual variable index.
  std::vector<int> row_dual;
  /// Primal constraint name -> dual variable name (bound rows appear as
  /// "lb:<var>" / "ub:<var>").
  std::map<std::string, std::string> dual_of;
  /// Primal right-hand side entry -> its coefficient in the dual objective.
  std::map<std::string, double> rhs_coefficient;
};

/// LP dual of a minimization model. Finite variable bounds other than a zero
/// lower bound become explicit rows before dualizing.
DualModel dualize(const LinearModel& primal);

}  // namespace edgeplan
