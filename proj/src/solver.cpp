#include "edgeplan/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <set>
#include <sstream>

#include "Highs.h"

namespace edgeplan {

LinExpr& LinExpr::add(const LinExpr& other, double scale) {
  for (const auto& t : other.terms) add(t.var, t.coef * scale);
  constant += other.constant * scale;
  return *this;
}

double LinExpr::evaluate(const std::vector<double>& values) const {
  double v = constant;
  for (const auto& t : terms) v += t.coef * values.at(t.var);
  return v;
}

int LinearModel::add_variable(std::string name, double lower, double upper, bool integer) {
  if (var_index_.count(name)) throw ModelError("duplicate variable name: " + name);
  if (lower > upper) throw ModelError("inverted bounds on variable " + name);
  const int idx = num_variables();
  var_index_.emplace(name, idx);
  variables_.push_back({std::move(name), lower, upper, integer});
  return idx;
}

int LinearModel::add_constraint(std::string name, std::vector<Term> terms, Sense sense,
                                double rhs) {
  if (row_index_.count(name)) throw ModelError("duplicate constraint name: " + name);
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_variables())
      throw ModelError("constraint " + name + " references undeclared variable");
  }
  const int idx = num_constraints();
  row_index_.emplace(name, idx);
  constraints_.push_back({std::move(name), std::move(terms), sense, rhs});
  return idx;
}

int LinearModel::add_constraint(std::string name, const LinExpr& lhs, Sense sense, double rhs) {
  return add_constraint(std::move(name), lhs.terms, sense, rhs - lhs.constant);
}

void LinearModel::set_objective(ObjSense sense, const LinExpr& expr) {
  for (const auto& t : expr.terms) {
    if (t.var < 0 || t.var >= num_variables())
      throw ModelError("objective references undeclared variable");
  }
  objective_ = {sense, expr.terms, expr.constant};
}

void LinearModel::set_bounds(int var, double lower, double upper) {
  if (lower > upper) throw ModelError("inverted bounds on variable " + variables_.at(var).name);
  variables_.at(var).lower = lower;
  variables_.at(var).upper = upper;
}

std::optional<int> LinearModel::find_variable(std::string_view name) const {
  auto it = var_index_.find(std::string(name));
  if (it == var_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> LinearModel::find_constraint(std::string_view name) const {
  auto it = row_index_.find(std::string(name));
  if (it == row_index_.end()) return std::nullopt;
  return it->second;
}

int LinearModel::variable_index(std::string_view name) const {
  auto idx = find_variable(name);
  if (!idx) throw ModelError("unknown variable: " + std::string(name));
  return *idx;
}

int LinearModel::constraint_index(std::string_view name) const {
  auto idx = find_constraint(name);
  if (!idx) throw ModelError("unknown constraint: " + std::string(name));
  return *idx;
}

bool LinearModel::has_integers() const {
  return std::any_of(variables_.begin(), variables_.end(),
                     [](const Variable& v) { return v.integer; });
}

std::vector<std::string> LinearModel::check() const {
  std::vector<std::string> out;
  for (const auto& v : variables_) {
    if (v.lower > v.upper) out.push_back("inverted bounds on " + v.name);
    if (std::isnan(v.lower) || std::isnan(v.upper)) out.push_back("NaN bound on " + v.name);
    if (v.lower == kInf || v.upper == -kInf) out.push_back("empty domain on " + v.name);
  }
  for (const auto& c : constraints_) {
    if (!std::isfinite(c.rhs)) out.push_back("non-finite rhs in " + c.name);
    for (const auto& t : c.terms) {
      if (t.var < 0 || t.var >= num_variables()) out.push_back("bad index in " + c.name);
      else if (!std::isfinite(t.coef)) out.push_back("non-finite coefficient in " + c.name);
    }
  }
  for (const auto& t : objective_.terms) {
    if (t.var < 0 || t.var >= num_variables()) out.push_back("bad index in objective");
    else if (!std::isfinite(t.coef)) out.push_back("non-finite objective coefficient");
  }
  if (!std::isfinite(objective_.constant)) out.push_back("non-finite objective constant");
  return out;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kInfeasibleOrUnbounded: return "infeasible-or-unbounded";
    case SolveStatus::kGapLimit: return "gap-limit";
    case SolveStatus::kTimeLimit: return "time-limit";
  }
  return "unknown";
}

double SolveResult::value(const LinearModel& model, std::string_view name) const {
  return values.at(model.variable_index(name));
}

namespace {

void configure(Highs& highs, const SolverParams& params) {
  highs.setOptionValue("output_flag", params.verbose);
  highs.setOptionValue("mip_rel_gap", params.rel_gap);
  highs.setOptionValue("mip_abs_gap", 0.0);
  highs.setOptionValue("random_seed", params.seed);
  highs.setOptionValue("threads", 1);
  highs.setOptionValue("primal_feasibility_tolerance", 1e-9);
  highs.setOptionValue("dual_feasibility_tolerance", 1e-9);
  highs.setOptionValue("mip_feasibility_tolerance", 1e-9);
  if (std::isfinite(params.time_limit)) highs.setOptionValue("time_limit", params.time_limit);
}

HighsLp to_highs(const LinearModel& model) {
  HighsLp lp;
  const int n = model.num_variables();
  const int m = model.num_constraints();
  lp.num_col_ = n;
  lp.num_row_ = m;
  lp.col_cost_.assign(n, 0.0);
  lp.col_lower_.resize(n);
  lp.col_upper_.resize(n);
  lp.integrality_.assign(n, HighsVarType::kContinuous);
  for (int j = 0; j < n; ++j) {
    const auto& v = model.variable(j);
    lp.col_lower_[j] = v.lower == -kInf ? -kHighsInf : v.lower;
    lp.col_upper_[j] = v.upper == kInf ? kHighsInf : v.upper;
    if (v.integer) lp.integrality_[j] = HighsVarType::kInteger;
  }
  if (!model.has_integers()) lp.integrality_.clear();
  for (const auto& t : model.objective().terms) lp.col_cost_[t.var] += t.coef;
  lp.offset_ = model.objective().constant;
  lp.sense_ = model.objective().sense == ObjSense::kMinimize ? ::ObjSense::kMinimize
                                                             : ::ObjSense::kMaximize;

  // Row-wise assembly with duplicate terms merged.
  lp.a_matrix_.format_ = MatrixFormat::kRowwise;
  lp.a_matrix_.num_col_ = n;
  lp.a_matrix_.num_row_ = m;
  lp.a_matrix_.start_.assign(1, 0);
  lp.row_lower_.resize(m);
  lp.row_upper_.resize(m);
  std::map<int, double> merged;
  for (int i = 0; i < m; ++i) {
    const auto& c = model.constraints()[i];
    merged.clear();
    for (const auto& t : c.terms) merged[t.var] += t.coef;
    for (const auto& [var, coef] : merged) {
      if (coef == 0.0) continue;
      lp.a_matrix_.index_.push_back(var);
      lp.a_matrix_.value_.push_back(coef);
    }
    lp.a_matrix_.start_.push_back(static_cast<HighsInt>(lp.a_matrix_.index_.size()));
    lp.row_lower_[i] = c.sense == Sense::kLessEqual ? -kHighsInf : c.rhs;
    lp.row_upper_[i] = c.sense == Sense::kGreaterEqual ? kHighsInf : c.rhs;
  }
  return lp;
}

SolveResult collect(Highs& highs, bool is_mip) {
  SolveResult res;
  const HighsModelStatus ms = highs.getModelStatus();
  const HighsInfo& info = highs.getInfo();
  switch (ms) {
    case HighsModelStatus::kOptimal: res.status = SolveStatus::kOptimal; break;
    case HighsModelStatus::kModelEmpty:
      // No columns: the optimum is the objective constant.
      res.status = SolveStatus::kOptimal;
      res.objective = highs.getLp().offset_;
      return res;
    case HighsModelStatus::kInfeasible: res.status = SolveStatus::kInfeasible; break;
    case HighsModelStatus::kUnbounded: res.status = SolveStatus::kUnbounded; break;
    case HighsModelStatus::kUnboundedOrInfeasible:
      res.status = SolveStatus::kInfeasibleOrUnbounded;
      break;
    case HighsModelStatus::kTimeLimit: res.status = SolveStatus::kTimeLimit; break;
    case HighsModelStatus::kObjectiveBound:
    case HighsModelStatus::kObjectiveTarget:
    case HighsModelStatus::kSolutionLimit:
    case HighsModelStatus::kIterationLimit:
    case HighsModelStatus::kInterrupt: res.status = SolveStatus::kGapLimit; break;
    default:
      throw BackendError("HiGHS finished with model status '" + highs.modelStatusToString(ms) +
                         "'");
  }
  if (info.primal_solution_status == kSolutionStatusFeasible) {
    const HighsSolution& sol = highs.getSolution();
    res.values = sol.col_value;
    res.objective = info.objective_function_value;
    if (!is_mip && sol.dual_valid) res.duals = sol.row_dual;
  } else if (res.status == SolveStatus::kOptimal) {
    throw BackendError("HiGHS reported optimal without a feasible solution");
  }
  res.mip_gap = is_mip ? info.mip_gap : 0.0;
  if (res.status == SolveStatus::kOptimal && is_mip && std::isfinite(res.mip_gap) &&
      res.mip_gap > 1.0)
    res.status = SolveStatus::kGapLimit;
  return res;
}

}  // namespace

SolveResult solve(const LinearModel& model, const SolverParams& params) {
  auto issues = model.check();
  if (!issues.empty()) throw ModelError("malformed model: " + issues.front());
  Highs highs;
  configure(highs, params);
  HighsLp lp = to_highs(model);
  const bool is_mip = model.has_integers();
  if (highs.passModel(std::move(lp)) == HighsStatus::kError)
    throw BackendError("HiGHS rejected the model");
  if (highs.run() == HighsStatus::kError) throw BackendError("HiGHS run failed");
  SolveResult res = collect(highs, is_mip);
  if (res.has_solution()) {
    // Snap integers that HiGHS left within its feasibility tolerance.
    for (int j = 0; j < model.num_variables(); ++j) {
      const auto& v = model.variable(j);
      double& x = res.values[j];
      if (v.integer) x = std::round(x);
      x = std::clamp(x, v.lower, v.upper);
    }
  }
  return res;
}

SolveResult solve_file(const std::string& path, const SolverParams& params) {
  Highs highs;
  configure(highs, params);
  if (highs.readModel(path) == HighsStatus::kError)
    throw BackendError("HiGHS could not read " + path);
  const auto& integrality = highs.getLp().integrality_;
  const bool is_mip = std::any_of(integrality.begin(), integrality.end(),
                                  [](HighsVarType t) { return t != HighsVarType::kContinuous; });
  if (highs.run() == HighsStatus::kError) throw BackendError("HiGHS run failed on " + path);
  return collect(highs, is_mip);
}

SolveResult polish_integers(const LinearModel& model, const SolveResult& incumbent,
                            const SolverParams& params) {
  if (!incumbent.has_solution()) throw ModelError("polish_integers needs an incumbent");
  LinearModel fixed = model;
  std::vector<std::pair<int, double>> pins;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (!model.variable(j).integer) continue;
    pins.emplace_back(j, std::round(incumbent.values.at(j)));
  }
  // Rebuild without integrality so the LP path (and its duals) is used.
  LinearModel lp;
  for (int j = 0; j < fixed.num_variables(); ++j) {
    const auto& v = fixed.variable(j);
    lp.add_variable(v.name, v.lower, v.upper, false);
  }
  for (auto [j, val] : pins) lp.set_bounds(j, val, val);
  for (const auto& c : fixed.constraints()) lp.add_constraint(c.name, c.terms, c.sense, c.rhs);
  LinExpr obj;
  obj.terms = fixed.objective().terms;
  obj.constant = fixed.objective().constant;
  lp.set_objective(fixed.objective().sense, obj);
  SolveResult res = solve(lp, params);
  if (res.has_solution()) {
    for (auto [j, val] : pins) res.values[j] = val;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Export

namespace {

bool lp_name_char(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  static const std::string extra = "!\"#$%&()/,.;?@_`'{}|~";
  return extra.find(c) != std::string::npos;
}

std::string sanitize_lp(const std::string& name, char prefix) {
  std::string out;
  out.reserve(name.size() + 2);
  for (char c : name) out.push_back(lp_name_char(c) ? c : '_');
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])) || out[0] == '.' ||
      out[0] == 'e' || out[0] == 'E') {
    out.insert(out.begin(), {prefix, '_'});
  }
  if (out.size() > 255) throw ExportError("name too long for LP format: " + name);
  return out;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Shortest %g rendering that reads back to exactly `v`. Values needing more
// than the 12-character fixed-MPS field overflow it; fields stay separated by
// blanks so whitespace-splitting readers still parse them losslessly.
std::string mps_num(double v) {
  char buf[40];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void lp_terms(std::ostringstream& os, const std::vector<Term>& terms,
              const std::vector<std::string>& names) {
  std::map<int, double> merged;
  for (const auto& t : terms) merged[t.var] += t.coef;
  int count = 0;
  for (const auto& [var, coef] : merged) {
    if (coef == 0.0) continue;
    os << (coef < 0 ? " - " : " + ") << num(std::abs(coef)) << ' ' << names[var];
    if (++count % 8 == 0) os << "\n   ";
  }
}

std::string export_lp(const LinearModel& model) {
  std::vector<std::string> cols, rows;
  std::set<std::string> seen;
  for (const auto& v : model.variables()) {
    cols.push_back(sanitize_lp(v.name, 'v'));
    if (!seen.insert(cols.back()).second)
      throw ExportError("variable name collision after sanitization: " + v.name);
  }
  seen.clear();
  for (const auto& c : model.constraints()) {
    rows.push_back(sanitize_lp(c.name, 'r'));
    if (!seen.insert(rows.back()).second)
      throw ExportError("constraint name collision after sanitization: " + c.name);
  }
  std::ostringstream os;
  const auto& obj = model.objective();
  os << (obj.sense == ObjSense::kMinimize ? "Minimize\n" : "Maximize\n");
  os << " obj:";
  lp_terms(os, obj.terms, cols);
  if (obj.constant != 0.0) os << (obj.constant < 0 ? " - " : " + ") << num(std::abs(obj.constant));
  os << "\nSubject To\n";
  for (int i = 0; i < model.num_constraints(); ++i) {
    const auto& c = model.constraints()[i];
    os << ' ' << rows[i] << ':';
    std::vector<Term> terms = c.terms;
    bool empty = std::all_of(terms.begin(), terms.end(), [](const Term& t) { return t.coef == 0; });
    if (empty) {
      if (cols.empty()) throw ExportError("constraint without variables: " + c.name);
      os << " 0 " << cols[0];
    }
    lp_terms(os, terms, cols);
    os << (c.sense == Sense::kLessEqual ? " <= " : c.sense == Sense::kGreaterEqual ? " >= " : " = ")
       << num(c.rhs) << '\n';
  }
  os << "Bounds\n";
  for (int j = 0; j < model.num_variables(); ++j) {
    const auto& v = model.variable(j);
    if (v.lower == -kInf && v.upper == kInf) {
      os << ' ' << cols[j] << " free\n";
    } else if (v.lower == v.upper) {
      os << ' ' << cols[j] << " = " << num(v.lower) << '\n';
    } else {
      os << ' ' << (v.lower == -kInf ? "-inf" : num(v.lower)) << " <= " << cols[j] << " <= "
         << (v.upper == kInf ? "+inf" : num(v.upper)) << '\n';
    }
  }
  if (model.has_integers()) {
    os << "General\n";
    for (int j = 0; j < model.num_variables(); ++j)
      if (model.variable(j).integer) os << ' ' << cols[j] << '\n';
  }
  os << "End\n";
  return os.str();
}

std::string mps_line(const std::string& f1, const std::string& f2, const std::string& f3 = "",
                     const std::string& f4 = "", const std::string& f5 = "",
                     const std::string& f6 = "") {
  char buf[128];
  std::snprintf(buf, sizeof buf, " %-2s %-8s  %-8s  %12s   %-8s  %12s", f1.c_str(), f2.c_str(),
                f3.c_str(), f4.c_str(), f5.c_str(), f6.c_str());
  std::string s = buf;
  s.erase(s.find_last_not_of(' ') + 1);
  return s + '\n';
}

std::string mps_name(char kind, int idx) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%07d", kind, idx + 1);
  return buf;
}

std::string export_mps(const LinearModel& model) {
  const int n = model.num_variables();
  const int m = model.num_constraints();
  if (n >= 10000000 || m >= 10000000) throw ExportError("model too large for fixed MPS names");
  std::ostringstream os;
  os << "* fixed MPS; original names follow\n";
  for (int j = 0; j < n; ++j) os << "* " << mps_name('C', j) << ' ' << model.variable(j).name << '\n';
  for (int i = 0; i < m; ++i)
    os << "* " << mps_name('R', i) << ' ' << model.constraints()[i].name << '\n';
  os << "NAME          EDGEPLAN\n";
  if (model.objective().sense == ObjSense::kMaximize) os << "OBJSENSE\n    MAX\n";
  os << "ROWS\n";
  os << " N  OBJ\n";
  for (int i = 0; i < m; ++i) {
    const auto s = model.constraints()[i].sense;
    os << ' ' << (s == Sense::kLessEqual ? 'L' : s == Sense::kGreaterEqual ? 'G' : 'E') << "  "
       << mps_name('R', i) << '\n';
  }
  // Column-major coefficient lists.
  std::vector<std::map<int, double>> col(n);
  for (const auto& t : model.objective().terms) col[t.var][-1] += t.coef;
  for (int i = 0; i < m; ++i)
    for (const auto& t : model.constraints()[i].terms) col[t.var][i] += t.coef;
  os << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < n; ++j) {
    const bool integer = model.variable(j).integer;
    if (integer != in_int) {
      char mk[16];
      std::snprintf(mk, sizeof mk, "M%07d", ++marker);
      os << "    " << mk << "  'MARKER'                 " << (integer ? "'INTORG'" : "'INTEND'")
         << '\n';
      in_int = integer;
    }
    const std::string cname = mps_name('C', j);
    bool wrote = false;
    for (const auto& [row, coef] : col[j]) {
      if (coef == 0.0) continue;
      os << mps_line("", cname, row < 0 ? "OBJ" : mps_name('R', row), mps_num(coef));
      wrote = true;
    }
    if (!wrote) os << mps_line("", cname, "OBJ", "0");
  }
  if (in_int) {
    char mk[16];
    std::snprintf(mk, sizeof mk, "M%07d", ++marker);
    os << "    " << mk << "  'MARKER'                 'INTEND'\n";
  }
  os << "RHS\n";
  if (model.objective().constant != 0.0)
    os << mps_line("", "RHS", "OBJ", mps_num(-model.objective().constant));
  for (int i = 0; i < m; ++i) {
    const double rhs = model.constraints()[i].rhs;
    if (rhs != 0.0) os << mps_line("", "RHS", mps_name('R', i), mps_num(rhs));
  }
  os << "BOUNDS\n";
  for (int j = 0; j < n; ++j) {
    const auto& v = model.variable(j);
    const std::string cname = mps_name('C', j);
    if (v.lower == v.upper) {
      os << mps_line("FX", "BND", cname, mps_num(v.lower));
      continue;
    }
    if (v.lower == -kInf && v.upper == kInf) {
      os << mps_line("FR", "BND", cname);
      continue;
    }
    if (v.lower == -kInf) os << mps_line("MI", "BND", cname);
    else if (v.lower != 0.0 || v.integer) os << mps_line("LO", "BND", cname, mps_num(v.lower));
    if (v.upper != kInf) os << mps_line("UP", "BND", cname, mps_num(v.upper));
    else if (v.integer) os << mps_line("PL", "BND", cname);
  }
  os << "ENDATA\n";
  return os.str();
}

}  // namespace

std::string export_model(const LinearModel& model, ExportFormat format) {
  auto issues = model.check();
  if (!issues.empty()) throw ExportError("malformed model: " + issues.front());
  return format == ExportFormat::kLp ? export_lp(model) : export_mps(model);
}

// ---------------------------------------------------------------------------
// Dualization

DualModel dualize(const LinearModel& primal) {
  if (primal.has_integers()) throw ModelError("dualize requires a pure LP");
  if (primal.objective().sense != ObjSense::kMinimize)
    throw ModelError("dualize expects a minimization model");

  struct Row {
    std::string name;
    std::vector<Term> terms;
    Sense sense;
    double rhs;
  };
  std::vector<Row> rows;
  rows.reserve(primal.num_constraints());
  for (const auto& c : primal.constraints()) rows.push_back({c.name, c.terms, c.sense, c.rhs});

  // Sign class per primal variable: +1 (x >= 0), -1 (x <= 0), 0 (free).
  std::vector<int> sign(primal.num_variables());
  for (int j = 0; j < primal.num_variables(); ++j) {
    const auto& v = primal.variable(j);
    if (v.lower == 0.0) {
      sign[j] = 1;
      if (v.upper != kInf) rows.push_back({"ub:" + v.name, {{j, 1.0}}, Sense::kLessEqual, v.upper});
    } else if (v.lower == -kInf && v.upper == 0.0) {
      sign[j] = -1;
    } else {
      sign[j] = 0;
      if (v.lower != -kInf && v.lower == v.upper) {
        rows.push_back({"fx:" + v.name, {{j, 1.0}}, Sense::kEqual, v.lower});
        continue;
      }
      if (v.lower != -kInf) rows.push_back({"lb:" + v.name, {{j, 1.0}}, Sense::kGreaterEqual, v.lower});
      if (v.upper != kInf) rows.push_back({"ub:" + v.name, {{j, 1.0}}, Sense::kLessEqual, v.upper});
    }
  }

  DualModel out;
  LinearModel& d = out.model;
  LinExpr dual_obj;
  dual_obj.constant = primal.objective().constant;
  std::vector<std::vector<Term>> col_terms(primal.num_variables());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const Row& row = rows[r];
    std::string dname = "dual_" + row.name;
    std::replace(dname.begin(), dname.end(), ':', '_');
    double lo = -kInf, hi = kInf;
    if (row.sense == Sense::kGreaterEqual) lo = 0.0;
    if (row.sense == Sense::kLessEqual) hi = 0.0;
    const int y = d.add_variable(dname, lo, hi);
    if (r < static_cast<std::size_t>(primal.num_constraints())) out.row_dual.push_back(y);
    out.dual_of[row.name] = dname;
    out.rhs_coefficient[row.name] = row.rhs;
    dual_obj.add(y, row.rhs);
    for (const auto& t : row.terms) col_terms[t.var].push_back({y, t.coef});
  }
  std::vector<double> cost(primal.num_variables(), 0.0);
  for (const auto& t : primal.objective().terms) cost[t.var] += t.coef;
  for (int j = 0; j < primal.num_variables(); ++j) {
    const Sense s = sign[j] > 0 ? Sense::kLessEqual
                    : sign[j] < 0 ? Sense::kGreaterEqual
                                  : Sense::kEqual;
    d.add_constraint("col_" + primal.variable(j).name, col_terms[j], s, cost[j]);
  }
  d.set_objective(ObjSense::kMaximize, dual_obj);
  return out;
}

}  // namespace edgeplan
