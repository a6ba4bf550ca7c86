// Command-line front end: instance generation, estimation, solving, oracle
// checks, Monte-Carlo evaluation and sweep reports.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "edgeplan/evaluation.hpp"
#include "edgeplan/instance.hpp"
#include "edgeplan/oracle.hpp"
#include "edgeplan/rod.hpp"
#include "edgeplan/scenario_gen.hpp"
#include "edgeplan/uncertainty.hpp"

namespace ep = edgeplan;
using json = nlohmann::json;

namespace {

enum Exit : int {
  kOk = 0,
  kMismatch = 1,
  kUsage = 2,
  kInput = 3,
  kSolver = 4,
  kInternal = 5,
};

void report_error(const std::string& kind, const std::string& message,
                  const std::vector<std::string>& details = {}) {
  json j{{"error", kind}, {"message", message}};
  if (!details.empty()) j["details"] = details;
  std::cerr << j.dump() << '\n';
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

/// JSON config file. Top-level scalars apply to the chosen subcommand, an
/// object named after a subcommand scopes its keys, and a "solver" object maps
/// gap, time_limit and seed onto the matching solve flags.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        j[name] = res.size() == 1 ? json(res.front()) : json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      const json child = json::parse(to_config(sub, default_also, false, ""));
      if (!child.empty()) j[sub->get_name()] = child;
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    std::vector<std::string> root;
    for (const CLI::App* sub : app_->get_subcommands()) root.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    collect(j, root, items, true);
    return items;
  }

 private:
  void collect(const json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items,
               bool top) const {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        if (key == "solver") {
          collect_solver(value, parents, items);
        } else if (top) {
          collect(value, {key}, items, false);
        } else {
          throw CLI::ConversionError("unexpected nested object '" + key + "' in config");
        }
        continue;
      }
      // Scalars at the top level only apply when a subcommand is selected.
      if (top && parents.empty()) continue;
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      items.push_back(std::move(item));
    }
  }

  void collect_solver(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) const {
    for (const auto& [key, value] : j.items()) {
      std::string name;
      if (key == "gap" || key == "rel_gap") name = "solver-gap";
      else if (key == "time_limit" || key == "time-limit") name = "time-limit";
      else if (key == "seed") name = "seed";
      else throw CLI::ConversionError("unknown solver setting '" + key + "'");
      items.push_back({parents, name, {scalar(value)}});
    }
  }

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  const CLI::App* app_;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

/// Options shared by every subcommand that runs the decomposition.
struct SolveOptions {
  std::string instance;
  std::string model = "daro-dus";
  std::optional<int> gamma;
  std::optional<double> alpha;
  double eps1 = 1e-3;
  double eps2 = 1e-3;
  int max_outer = 50;
  int max_inner = 100;
  int seed = 0;
  double solver_gap = 1e-9;
  double time_limit = 0.0;
  bool time_constant = false;

  void attach(CLI::App* sub) {
    sub->add_option("--instance", instance, "Instance JSON")->required()->check(CLI::ExistingFile);
    sub->add_option("--model", model, "det, saro, daro-sus or daro-dus");
    sub->add_option("--gamma", gamma, "Override the per-period budget");
    sub->add_option("--alpha", alpha, "Size a static set as alpha times the forecast");
    sub->add_option("--eps1", eps1, "Outer relative gap")->check(CLI::PositiveNumber);
    sub->add_option("--eps2", eps2, "Inner relative gap")->check(CLI::PositiveNumber);
    sub->add_option("--max-outer", max_outer, "Outer iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--max-inner", max_inner, "Inner iteration cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "Solver random seed");
    sub->add_option("--solver-gap", solver_gap, "MILP relative gap")->check(CLI::NonNegativeNumber);
    sub->add_option("--time-limit", time_limit, "Per-solve time limit in seconds, 0 for none")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--time-constant", time_constant, "Keep reservation, placement and allocation fixed over time");
  }

  ep::RodConfig config() const {
    ep::RodConfig cfg;
    cfg.outer_gap = eps1;
    cfg.inner_gap = eps2;
    cfg.max_outer = max_outer;
    cfg.max_inner = max_inner;
    cfg.solver.rel_gap = solver_gap;
    cfg.solver.seed = seed;
    cfg.solver.time_limit = time_limit > 0 ? time_limit : ep::kInf;
    cfg.model.time_constant = time_constant;
    return cfg;
  }

  /// Uncertainty set the chosen model is solved against.
  ep::UncertaintySpec spec_for(const ep::Instance& inst, ep::Baseline which) const {
    ep::UncertaintySpec spec = inst.uncertainty;
    if (gamma) spec = ep::with_budget(spec, *gamma);
    const bool wants_static = which == ep::Baseline::kSaro || which == ep::Baseline::kDaroSus;
    if (wants_static && alpha) {
      spec.set = ep::sus_from_alpha(inst.forecast, *alpha, spec.budget());
    } else if (which == ep::Baseline::kSaro && spec.is_dynamic()) {
      spec.set = ep::memoryless_from_dus(spec.dus(), inst.horizon);
    }
    return spec;
  }
};

ep::RodResult run_model(const ep::Instance& inst, ep::Baseline which, const SolveOptions& so,
                        ep::RodConfig cfg) {
  return ep::solve_baseline(inst, which, so.spec_for(inst, which), cfg);
}

int cmd_generate(int aps, int ens, int nodes, int attach, int horizon, int history, int lag, int budget,
                 bool static_set, double alpha, std::uint64_t seed, const std::string& out,
                 const std::string& history_out, const std::string& fit_out) {
  ep::InstanceOptions opts;
  opts.topology.aps = aps;
  opts.topology.ens = ens;
  opts.topology.nodes = nodes;
  opts.topology.attach = attach;
  opts.horizon = horizon;
  opts.history = history;
  opts.lag = lag;
  opts.budget = budget;
  opts.dynamic = !static_set;
  opts.alpha = alpha;
  opts.seed = seed;
  const ep::GeneratedInstance g = ep::generate_instance(opts);
  write_text(out, ep::serialize_instance(g.instance));
  if (!history_out.empty()) write_text(history_out, ep::format_traces_csv(g.history));
  if (!fit_out.empty()) write_text(fit_out, ep::ar_fit_to_json(g.fit));
  return kOk;
}

int cmd_fit(const std::string& traces_path, int lag, const std::string& out) {
  const ep::DemandTraces traces = ep::read_traces_csv(traces_path);
  const long first = traces.periods.empty() ? 0 : traces.periods.front();
  const ep::SeasonalFit sf = ep::fit_seasonal(traces.values, {}, first);
  ep::ARFit fit = ep::fit_ar(sf.residuals, lag);
  fit.phi = sf.phi;
  if (!sf.rank_deficient_areas.empty()) {
    json w{{"warning", "rank-deficient seasonal fit"}, {"areas", sf.rank_deficient_areas}};
    std::cerr << w.dump() << '\n';
  }
  write_text(out, ep::ar_fit_to_json(fit));
  return kOk;
}

int cmd_solve(const SolveOptions& so, const std::string& out, const std::string& log_path) {
  const ep::Instance inst = ep::load_instance(so.instance);
  const ep::Baseline which = ep::parse_baseline(so.model);
  ep::RodConfig cfg = so.config();
  std::unique_ptr<std::ofstream> log;
  if (!log_path.empty()) {
    log = std::make_unique<std::ofstream>(log_path);
    if (!*log) throw std::runtime_error("cannot open " + log_path + " for writing");
    cfg.on_iteration = [&log](const ep::IterationRecord& r) { *log << r.to_json() << '\n' << std::flush; };
  }
  const ep::RodResult r = run_model(inst, which, so, cfg);
  write_text(out, ep::rod_result_to_json(r));
  return kOk;
}

int cmd_oracle(const SolveOptions& so, double tolerance, std::uint64_t cap, const std::string& out) {
  const ep::Instance inst = ep::load_instance(so.instance);
  const ep::Baseline which = ep::parse_baseline(so.model);
  if (which == ep::Baseline::kDet || which == ep::Baseline::kSaro)
    throw std::invalid_argument("oracle-check applies to daro-sus and daro-dus");
  const ep::UncertaintySpec spec = so.spec_for(inst, which);
  ep::UncertaintySpec solved = spec;
  if (which == ep::Baseline::kDaroSus && spec.is_dynamic())
    solved.set = ep::memoryless_from_dus(spec.dus(), inst.horizon);
  const ep::RodConfig cfg = so.config();
  const ep::RodResult r = ep::solve_rod(inst, solved, cfg);
  const ep::ExactFull full = ep::exact_full(inst, solved, cfg.solver, cfg.model, cap);
  const ep::ExactQ q = ep::exact_q(inst, r.first_stage, solved, cfg.solver, cfg.model, cap);
  const double first_cost = ep::reservation_cost(inst, r.first_stage);
  const double rod_q = r.objective - first_cost;

  const double obj_diff = std::abs(r.objective - full.value);
  const double obj_tol = tolerance * std::max(1.0, std::abs(full.value));
  const double q_diff = std::abs(rod_q - q.value);
  const double q_tol = tolerance * std::max(1.0, std::abs(q.value));
  const bool ok = obj_diff <= obj_tol && q_diff <= q_tol;
  json rep{{"model", so.model},
           {"candidates", full.candidates},
           {"rod_objective", r.objective},
           {"oracle_objective", full.value},
           {"objective_diff", obj_diff},
           {"objective_tolerance", obj_tol},
           {"rod_worst_case_recourse", rod_q},
           {"oracle_worst_case_recourse", q.value},
           {"worst_case_diff", q_diff},
           {"worst_case_tolerance", q_tol},
           {"rod_converged", r.converged},
           {"pass", ok}};
  write_text(out, rep.dump(2) + "\n");
  return ok ? kOk : kMismatch;
}

int cmd_evaluate(const SolveOptions& so, const std::string& models, int trajectories, std::uint64_t seed,
                 const std::string& out, const std::string& samples_out) {
  const ep::Instance inst = ep::load_instance(so.instance);
  const ep::RodConfig cfg = so.config();
  ep::EvalReport rep;
  rep.trajectories = trajectories;
  rep.seed = seed;
  const auto paths = ep::sample_trajectories(inst.uncertainty, inst.forecast, trajectories, seed);
  for (const auto& name : split(models, ',')) {
    const ep::Baseline which = ep::parse_baseline(name);
    const ep::RodResult r = run_model(inst, which, so, cfg);
    ep::PolicyReport p = ep::evaluate_result(inst, r, paths, cfg.solver, cfg.model);
    p.policy = ep::to_string(which);
    rep.policies.push_back(std::move(p));
  }
  write_text(out, rep.to_json() + "\n");
  if (!samples_out.empty()) write_text(samples_out, rep.samples_csv());
  return kOk;
}

int cmd_report(const SolveOptions& so, const std::vector<std::string>& sweeps, const std::string& out) {
  const ep::Instance inst = ep::load_instance(so.instance);
  const ep::Baseline which = ep::parse_baseline(so.model);
  ep::RodConfig cfg = so.config();
  std::vector<ep::SweepRow> rows;
  for (const auto& sweep : sweeps) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("sweep must look like axis=v1,v2,...");
    const std::string axis = sweep.substr(0, eq);
    const auto values = split(sweep.substr(eq + 1), ',');
    if (values.empty()) throw std::invalid_argument("sweep '" + axis + "' has no values");
    std::vector<ep::SweepRow> part;
    if (axis == "gamma") {
      std::vector<int> budgets;
      for (const auto& v : values) budgets.push_back(std::stoi(v));
      ep::Instance base = inst;
      base.uncertainty = so.spec_for(inst, which);
      part = ep::gamma_sweep(base, which, budgets, cfg);
    } else {
      std::vector<double> factors;
      for (const auto& v : values) factors.push_back(std::stod(v));
      ep::Instance base = inst;
      base.uncertainty = so.spec_for(inst, which);
      part = ep::cost_sweep(base, which, ep::parse_cost_axis(axis), factors, cfg);
    }
    rows.insert(rows.end(), part.begin(), part.end());
  }
  write_text(out, ep::sweep_csv(rows));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust edge resource planning"};
  app.set_config("--config", "", "JSON file with option defaults");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Synthesize an instance with a fitted demand model");
  int aps = 5, ens = 3, nodes = 100, attach = 2, horizon = 6, history = 1008, lag = 1, budget = 2;
  bool static_set = false;
  double gen_alpha = 0.2;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "-", history_out, fit_out;
  gen->add_option("--aps", aps, "Access points")->check(CLI::PositiveNumber);
  gen->add_option("--ens", ens, "Edge nodes")->check(CLI::PositiveNumber);
  gen->add_option("--nodes", nodes, "Graph size")->check(CLI::PositiveNumber);
  gen->add_option("--attach", attach, "Links per new node")->check(CLI::PositiveNumber);
  gen->add_option("--horizon", horizon, "Planning periods")->check(CLI::PositiveNumber);
  gen->add_option("--history", history, "Synthetic history length")->check(CLI::PositiveNumber);
  gen->add_option("--lag", lag, "AR order")->check(CLI::PositiveNumber);
  gen->add_option("--gamma", budget, "Per-period budget")->check(CLI::NonNegativeNumber);
  gen->add_flag("--static", static_set, "Emit a static set sized by --alpha");
  gen->add_option("--alpha", gen_alpha, "Static deviation fraction")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Instance JSON path, - for stdout");
  gen->add_option("--history-out", history_out, "Write the synthetic history CSV");
  gen->add_option("--fit-out", fit_out, "Write the fitted model JSON");

  // fit
  auto* fit = app.add_subcommand("fit", "Estimate seasonal and AR parameters from traces");
  std::string traces_path, fit_path = "-";
  int fit_lag = 1;
  fit->add_option("--traces", traces_path, "Trace CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--lag", fit_lag, "AR order")->check(CLI::PositiveNumber);
  fit->add_option("--out", fit_path, "Output JSON, - for stdout");

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one model");
  SolveOptions solve_opts;
  std::string solve_out = "-", log_path;
  solve_opts.attach(solve);
  solve->add_option("--out", solve_out, "Result JSON, - for stdout");
  solve->add_option("--log", log_path, "Iteration log, one JSON object per line");

  // oracle-check
  auto* oracle = app.add_subcommand("oracle-check", "Compare the decomposition with enumeration");
  SolveOptions oracle_opts;
  double tolerance = 1e-3;
  std::uint64_t cap = ep::kDefaultCandidateCap;
  std::string oracle_out = "-";
  oracle_opts.attach(oracle);
  oracle->add_option("--tolerance", tolerance, "Relative tolerance")->check(CLI::PositiveNumber);
  oracle->add_option("--cap", cap, "Maximum candidate count");
  oracle->add_option("--out", oracle_out, "Report JSON, - for stdout");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Monte-Carlo comparison of policies");
  SolveOptions eval_opts;
  std::string models = "det,saro,daro-sus,daro-dus", eval_out = "-", samples_out;
  int trajectories = 200;
  std::uint64_t eval_seed = 7;
  eval_opts.attach(eval);
  eval->add_option("--models", models, "Comma-separated policies");
  eval->add_option("--trajectories", trajectories, "Sampled demand paths")->check(CLI::NonNegativeNumber);
  eval->add_option("--sample-seed", eval_seed, "Trajectory sampling seed");
  eval->add_option("--out", eval_out, "Report JSON, - for stdout");
  eval->add_option("--samples", samples_out, "Per-trajectory cost CSV");

  // report
  auto* report = app.add_subcommand("report", "Sweep tables");
  SolveOptions report_opts;
  std::vector<std::string> sweeps;
  std::string report_out = "-";
  report_opts.attach(report);
  report->add_option("--sweep", sweeps, "gamma=0,1,2 or f|h|p|e=0.5,1,2")->required();
  report->add_option("--out", report_out, "CSV path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kUsage;
  }

  try {
    if (*gen)
      return cmd_generate(aps, ens, nodes, attach, horizon, history, lag, budget, static_set, gen_alpha,
                          gen_seed, gen_out, history_out, fit_out);
    if (*fit) return cmd_fit(traces_path, fit_lag, fit_path);
    if (*solve) return cmd_solve(solve_opts, solve_out, log_path);
    if (*oracle) return cmd_oracle(oracle_opts, tolerance, cap, oracle_out);
    if (*eval) return cmd_evaluate(eval_opts, models, trajectories, eval_seed, eval_out, samples_out);
    if (*report) return cmd_report(report_opts, sweeps, report_out);
  } catch (const ep::ValidationError& e) {
    report_error("validation", e.what(), e.violations());
    return kInput;
  } catch (const ep::ParseError& e) {
    report_error("parse", e.what());
    return kInput;
  } catch (const ep::DimensionError& e) {
    report_error("dimension", e.what());
    return kInput;
  } catch (const ep::BudgetError& e) {
    report_error("budget", e.what());
    return kInput;
  } catch (const ep::CapExceeded& e) {
    report_error("cap_exceeded", e.what());
    return kInput;
  } catch (const ep::BackendError& e) {
    report_error("solver", e.what());
    return kSolver;
  } catch (const ep::ModelError& e) {
    report_error("model", e.what());
    return kSolver;
  } catch (const std::invalid_argument& e) {
    report_error("usage", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return kInternal;
  }
  return kUsage;
}
