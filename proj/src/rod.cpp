#include "edgeplan/rod.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "edgeplan/json_io.hpp"

namespace edgeplan {

using jsonio::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void emit(const RodConfig& cfg, std::vector<IterationRecord>* log, IterationRecord rec) {
  if (cfg.on_iteration) cfg.on_iteration(rec);
  if (log) log->push_back(std::move(rec));
}

std::vector<Eigen::MatrixXd> demands(const std::vector<ScenarioEntry>& pool) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(pool.size());
  for (const auto& e : pool) out.push_back(e.demand);
  return out;
}

bool in_pool(const std::vector<ScenarioEntry>& pool, const GCandidate& g) {
  return std::any_of(pool.begin(), pool.end(), [&](const ScenarioEntry& e) { return e.g == g; });
}

json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string IterationRecord::to_json() const {
  json j;
  j["level"] = level;
  j["k"] = outer;
  if (level == "inner") j["r"] = inner;
  j["LB"] = num_or_null(lower);
  j["UB"] = num_or_null(upper);
  j["gap"] = num_or_null(gap);
  j["wall_ms"] = wall_ms;
  j["scenario_digest"] = scenario_digest;
  return j.dump();
}

void RodConfig::check() const {
  if (!(outer_gap > 0)) throw std::invalid_argument("outer gap must be > 0");
  if (!(inner_gap > 0)) throw std::invalid_argument("inner gap must be > 0");
  if (max_outer < 1 || max_inner < 1) throw std::invalid_argument("iteration caps must be >= 1");
}

double relative_gap(double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper)) return kInf;
  return (upper - lower) / std::max(std::abs(upper), 1e-12);
}

InnerResult inner_loop(const Instance& inst, const FirstStage& fs, const AffineDemandMap& demand_map,
                       int budget, const DemandDualBounds& bounds, const RodConfig& cfg,
                       const GCandidate& start, int outer_index,
                       std::vector<IterationRecord>* log) {
  cfg.check();
  const auto t0 = Clock::now();
  InnerResult out;
  double lower = -kInf, upper = kInf;
  GCandidate g = start;
  out.worst = start;
  for (int r = 1; r <= cfg.max_inner; ++r) {
    out.trace.iterations = r;
    const Eigen::MatrixXd demand = demand_map.apply(g);
    const RecourseSolution rec = solve_recourse(inst, fs, demand, cfg.model, cfg.solver);
    if (rec.value > lower) {
      lower = rec.value;
      out.worst = g;
    }
    const bool repeated = std::any_of(out.cuts.begin(), out.cuts.end(), [&](const CutPoint& c) {
      return c.binaries == rec.binaries;
    });
    if (!repeated) out.cuts.push_back(make_cut(inst, fs, rec.binaries, demand_map.offset, cfg.model));

    const BuiltModel mp = build_inner_mp(inst, out.cuts, demand_map, budget, bounds);
    const SolveResult res = solve(mp.model, cfg.solver);
    if (res.status != SolveStatus::kOptimal)
      throw BackendError("worst-case MILP at outer iteration " + std::to_string(outer_index) +
                         ", inner iteration " + std::to_string(r) + " ended with status " +
                         to_string(res.status));
    upper = std::min(upper, res.objective);
    const GCandidate next = extract_candidate(mp.map, res, inst.aps(), inst.horizon);
    out.trace.lower.push_back(lower);
    out.trace.upper.push_back(upper);
    const double gap = relative_gap(lower, upper);
    emit(cfg, log, {"inner", outer_index, r, lower, upper, gap, ms_since(t0), next.digest()});
    if (gap <= cfg.inner_gap) {
      out.trace.converged = true;
      break;
    }
    if (repeated) {
      // Same binaries again: the new cut adds nothing, so the bounds meet up
      // to solver tolerance.
      out.trace.converged = true;
      out.trace.diagnostic = "binary point repeated with relative gap " + std::to_string(gap);
      break;
    }
    g = next;
  }
  if (!out.trace.converged) out.trace.diagnostic = "inner iteration cap reached";
  out.value = upper;
  out.lower_bound = lower;
  out.demand = demand_map.apply(out.worst);
  return out;
}

InnerResult inner_loop(const Instance& inst, const FirstStage& fs, const UncertaintySpec& spec,
                       const RodConfig& cfg) {
  if (spec.clip) throw std::invalid_argument("clipped demand cannot be expressed as an affine map");
  const AffineDemandMap map = unroll_affine(spec, inst.forecast);
  const DemandDualBounds bounds = derive_demand_dual_bounds(inst, cfg.model, cfg.solver);
  const GCandidate start = extreme_total_demand(spec, inst.forecast, cfg.solver).first;
  return inner_loop(inst, fs, map, spec.budget(), bounds, cfg, start);
}

RodResult solve_rod(const Instance& inst, const UncertaintySpec& spec, const RodConfig& cfg) {
  cfg.check();
  if (spec.clip)
    throw std::invalid_argument(
        "the decomposition needs demand affine in the drivers; disable clipping");
  auto problems = check_uncertainty(spec, inst.aps(), inst.horizon);
  if (!problems.empty()) throw std::invalid_argument("invalid uncertainty set: " + problems.front());

  const auto t0 = Clock::now();
  RodResult out;
  out.model = spec.is_dynamic() ? "daro-dus" : "daro-sus";
  const AffineDemandMap map = unroll_affine(spec, inst.forecast);
  const DemandDualBounds bounds = derive_demand_dual_bounds(inst, cfg.model, cfg.solver);
  const auto [g0, lambda0] = extreme_total_demand(spec, inst.forecast, cfg.solver);
  out.pool.push_back({g0, lambda0});

  double lower = -kInf, upper = kInf;
  GCandidate best_worst = g0;
  for (int k = 1; k <= cfg.max_outer; ++k) {
    const auto tk = Clock::now();
    out.outer_iterations = k;
    const BuiltModel om = build_outer_mp(inst, demands(out.pool), cfg.model);
    const SolveResult res = solve(om.model, cfg.solver);
    if (res.status != SolveStatus::kOptimal)
      throw BackendError("outer master at iteration " + std::to_string(k) + " ended with status " +
                         to_string(res.status));
    lower = std::max(lower, res.objective);
    const FirstStage fs = extract_first_stage(inst, om.map, res);

    InnerResult inner = inner_loop(inst, fs, map, spec.budget(), bounds, cfg, g0, k, &out.log);
    const double candidate = reservation_cost(inst, fs) + inner.value;
    if (candidate < upper) {
      upper = candidate;
      out.first_stage = fs;
      best_worst = inner.worst;
    }
    out.inner_runs.push_back(inner.trace);
    out.cut_counts.push_back(inner.cuts.size());
    out.lower_trace.push_back(lower);
    out.upper_trace.push_back(upper);
    out.iteration_ms.push_back(ms_since(tk));
    const double gap = relative_gap(lower, upper);
    emit(cfg, &out.log, {"outer", k, 0, lower, upper, gap, ms_since(t0), inner.worst.digest()});
    if (gap <= cfg.outer_gap) {
      out.converged = true;
      break;
    }
    if (in_pool(out.pool, inner.worst)) {
      out.converged = true;
      out.diagnostic = "worst-case scenario " + inner.worst.digest() +
                       " already in the pool; relative gap " + std::to_string(gap);
      break;
    }
    out.pool.push_back({inner.worst, inner.demand});
  }
  if (!out.converged) out.diagnostic = "outer iteration cap reached";

  out.lower_bound = lower;
  out.upper_bound = upper;
  out.objective = upper;
  out.gap = relative_gap(lower, upper);
  out.worst_demand = map.apply(best_worst);
  const RecourseSolution rec =
      solve_recourse(inst, out.first_stage, out.worst_demand, cfg.model, cfg.solver);
  out.worst_plan = rec.plan;
  out.breakdown = cost_breakdown(inst, out.first_stage, rec.plan);
  out.wall_ms = ms_since(t0);
  return out;
}

Baseline parse_baseline(const std::string& name) {
  if (name == "det") return Baseline::kDet;
  if (name == "saro") return Baseline::kSaro;
  if (name == "daro-sus" || name == "daro_sus") return Baseline::kDaroSus;
  if (name == "daro-dus" || name == "daro_dus") return Baseline::kDaroDus;
  throw std::invalid_argument("unknown model '" + name + "' (det, saro, daro-sus, daro-dus)");
}

std::string to_string(Baseline b) {
  switch (b) {
    case Baseline::kDet: return "det";
    case Baseline::kSaro: return "saro";
    case Baseline::kDaroSus: return "daro-sus";
    case Baseline::kDaroDus: return "daro-dus";
  }
  return "unknown";
}

SusSpec memoryless_from_dus(const DusSpec& dus, int periods) {
  SusSpec s;
  s.budget = dus.budget;
  s.deviation.resize(dus.mixing.rows(), periods);
  for (Eigen::Index i = 0; i < dus.mixing.rows(); ++i)
    s.deviation.row(i).setConstant(dus.mixing.row(i).norm());
  return s;
}

RodResult solve_det(const Instance& inst, const RodConfig& cfg) {
  const auto t0 = Clock::now();
  // Plan on the nominal path: the forecast plus the residual carried over from
  // the seed, which is the forecast itself for a static set.
  const GCandidate zero = GCandidate::zeros(inst.aps(), inst.horizon);
  const Eigen::MatrixXd nominal = realize(inst.uncertainty, inst.forecast, zero);
  const BuiltModel bm = build_det(inst, nominal, cfg.model);
  const SolveResult res = solve(bm.model, cfg.solver);
  if (res.status != SolveStatus::kOptimal)
    throw BackendError("deterministic model ended with status " + to_string(res.status));
  RodResult out;
  out.model = "det";
  out.first_stage = extract_first_stage(inst, bm.map, res);
  const RecourseSolution rec =
      solve_recourse(inst, out.first_stage, nominal, cfg.model, cfg.solver);
  out.objective = reservation_cost(inst, out.first_stage) + rec.value;
  out.lower_bound = res.objective;
  out.upper_bound = out.objective;
  out.gap = relative_gap(std::min(out.lower_bound, out.upper_bound), out.upper_bound);
  out.converged = true;
  out.outer_iterations = 1;
  out.lower_trace = {out.lower_bound};
  out.upper_trace = {out.upper_bound};
  out.pool.push_back({zero, nominal});
  out.worst_demand = nominal;
  out.worst_plan = rec.plan;
  out.breakdown = cost_breakdown(inst, out.first_stage, rec.plan);
  out.wall_ms = ms_since(t0);
  out.iteration_ms = {out.wall_ms};
  IterationRecord rec_line{"outer", 1, 0, out.lower_bound, out.upper_bound, out.gap, out.wall_ms,
                           zero.digest()};
  emit(cfg, &out.log, rec_line);
  return out;
}

namespace {

RecoursePlan static_plan(const Instance& inst, const SaroFirstStage& first, const VarMap& map,
                         const SolveResult& res) {
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  RecoursePlan rp = RecoursePlan::zeros(I, J, T);
  for (int j = 0; j < J; ++j) {
    rp.placement.row(j).setConstant(first.placement(j));
    if (first.placement(j) > 0.5 && inst.costs.initial_placement[j] == 0) {
      rp.startup(j, 0) = 1.0;
      rp.download_cloud(j, 0) = 1.0;
    }
  }
  for (int i = 0; i < I; ++i) {
    rp.alloc_cloud.row(i).setConstant(res.values.at(map.var({"sx0", 0, i})));
    for (int j = 0; j < J; ++j) rp.alloc_edge[i].row(j).setConstant(res.values.at(map.var({"sx", 0, i, j})));
  }
  return rp;
}

}  // namespace

RodResult solve_saro(const Instance& inst, const SusSpec& sus, const RodConfig& cfg) {
  cfg.check();
  const auto t0 = Clock::now();
  const UncertaintySpec spec{sus, false};
  auto problems = check_uncertainty(spec, inst.aps(), inst.horizon);
  if (!problems.empty()) throw std::invalid_argument("invalid uncertainty set: " + problems.front());
  RodResult out;
  out.model = "saro";
  const double required = saro_required_requests(inst, sus, cfg.solver);
  const DemandDualBounds bounds = saro_demand_dual_bounds(inst);
  const AffineDemandMap map = unroll_affine(sus, inst.forecast);
  const auto [g0, lambda0] = extreme_total_demand(spec, inst.forecast, cfg.solver);
  out.pool.push_back({g0, lambda0});

  double lower = -kInf, upper = kInf;
  SaroFirstStage best;
  GCandidate best_worst = g0;
  for (int k = 1; k <= cfg.max_outer; ++k) {
    const auto tk = Clock::now();
    out.outer_iterations = k;
    const BuiltModel master = build_saro_master(inst, demands(out.pool), required);
    const SolveResult res = solve(master.model, cfg.solver);
    if (res.status != SolveStatus::kOptimal)
      throw BackendError("static master at iteration " + std::to_string(k) + " ended with status " +
                         to_string(res.status));
    lower = std::max(lower, res.objective);
    const SaroFirstStage first = extract_saro_first_stage(inst, master.map, res);

    const std::vector<CutPoint> cuts{make_saro_cut(inst, first, map.offset)};
    const BuiltModel sub = build_inner_mp(inst, cuts, map, sus.budget, bounds);
    const SolveResult worst = solve(sub.model, cfg.solver);
    if (worst.status != SolveStatus::kOptimal)
      throw BackendError("static worst-case MILP at iteration " + std::to_string(k) +
                         " ended with status " + to_string(worst.status));
    const GCandidate g = extract_candidate(sub.map, worst, inst.aps(), inst.horizon);
    const double candidate = saro_first_stage_cost(inst, first) + worst.objective;
    if (candidate < upper) {
      upper = candidate;
      best = first;
      best_worst = g;
    }
    InnerTrace trace;
    trace.iterations = 1;
    trace.converged = true;
    trace.lower = {worst.objective};
    trace.upper = {worst.objective};
    out.inner_runs.push_back(trace);
    out.cut_counts.push_back(1);
    out.lower_trace.push_back(lower);
    out.upper_trace.push_back(upper);
    out.iteration_ms.push_back(ms_since(tk));
    const double gap = relative_gap(lower, upper);
    emit(cfg, &out.log, {"inner", k, 1, worst.objective, worst.objective, 0.0, ms_since(tk), g.digest()});
    emit(cfg, &out.log, {"outer", k, 0, lower, upper, gap, ms_since(t0), g.digest()});
    if (gap <= cfg.outer_gap) {
      out.converged = true;
      break;
    }
    if (in_pool(out.pool, g)) {
      out.converged = true;
      out.diagnostic = "worst-case scenario " + g.digest() + " already in the pool; relative gap " +
                       std::to_string(gap);
      break;
    }
    out.pool.push_back({g, map.apply(g)});
  }
  if (!out.converged) out.diagnostic = "outer iteration cap reached";

  out.static_first_stage = best;
  out.first_stage = saro_as_first_stage(inst, best);
  out.lower_bound = lower;
  out.upper_bound = upper;
  out.objective = upper;
  out.gap = relative_gap(lower, upper);
  out.worst_demand = map.apply(best_worst);
  const BuiltModel rec = build_saro_recourse(inst, best, out.worst_demand, false);
  const SolveResult rr = solve(rec.model, cfg.solver);
  if (rr.status != SolveStatus::kOptimal)
    throw BackendError("static recourse at the worst case ended with status " + to_string(rr.status));
  out.worst_plan = static_plan(inst, best, rec.map, rr);
  out.breakdown = cost_breakdown(inst, out.first_stage, out.worst_plan);
  out.wall_ms = ms_since(t0);
  return out;
}

RodResult solve_baseline(const Instance& inst, Baseline which, const UncertaintySpec& spec,
                         const RodConfig& cfg) {
  RodResult out;
  switch (which) {
    case Baseline::kDet:
      return solve_det(inst, cfg);
    case Baseline::kSaro:
      if (spec.is_dynamic()) throw std::invalid_argument("the static baseline needs a static set");
      return solve_saro(inst, spec.sus(), cfg);
    case Baseline::kDaroSus: {
      if (!spec.is_dynamic()) {
        out = solve_rod(inst, spec, cfg);
      } else {
        UncertaintySpec sus{memoryless_from_dus(spec.dus(), inst.horizon), spec.clip};
        out = solve_rod(inst, sus, cfg);
      }
      out.model = "daro-sus";
      return out;
    }
    case Baseline::kDaroDus:
      if (!spec.is_dynamic()) throw std::invalid_argument("daro-dus needs a dynamic set");
      out = solve_rod(inst, spec, cfg);
      out.model = "daro-dus";
      return out;
  }
  throw std::invalid_argument("unknown baseline");
}

namespace {

json breakdown_json(const CostBreakdown& b) {
  return {{"reserve", b.reserve},   {"adjust", b.adjust},       {"install", b.install},
          {"download", b.download}, {"storage", b.storage},     {"delay", b.delay},
          {"bandwidth", b.bandwidth}, {"total", b.total},       {"payment", b.payment()}};
}

json candidate_json(const GCandidate& g) {
  json out = json::array();
  for (Eigen::Index i = 0; i < g.g.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index t = 0; t < g.g.cols(); ++t) row.push_back(g.g(i, t));
    out.push_back(row);
  }
  return out;
}

}  // namespace

std::string rod_result_to_json(const RodResult& r) {
  json j;
  j["model"] = r.model;
  j["objective"] = num_or_null(r.objective);
  j["lower_bound"] = num_or_null(r.lower_bound);
  j["upper_bound"] = num_or_null(r.upper_bound);
  j["gap"] = num_or_null(r.gap);
  j["converged"] = r.converged;
  j["diagnostic"] = r.diagnostic;
  j["outer_iterations"] = r.outer_iterations;
  j["wall_ms"] = r.wall_ms;
  j["first_stage"] = {{"edge", jsonio::from_matrix(r.first_stage.edge)},
                      {"cloud", jsonio::from_vector(r.first_stage.cloud)}};
  if (r.static_first_stage)
    j["static_first_stage"] = {{"placement", jsonio::from_vector(r.static_first_stage->placement)},
                               {"edge", jsonio::from_vector(r.static_first_stage->edge)},
                               {"cloud", r.static_first_stage->cloud}};
  j["breakdown"] = breakdown_json(r.breakdown);
  j["lower_trace"] = r.lower_trace;
  j["upper_trace"] = r.upper_trace;
  j["iteration_ms"] = r.iteration_ms;
  json inner = json::array();
  for (std::size_t k = 0; k < r.inner_runs.size(); ++k) {
    const auto& tr = r.inner_runs[k];
    inner.push_back({{"lower", tr.lower},
                     {"upper", tr.upper},
                     {"iterations", tr.iterations},
                     {"converged", tr.converged},
                     {"diagnostic", tr.diagnostic},
                     {"cuts", k < r.cut_counts.size() ? r.cut_counts[k] : 0}});
  }
  j["inner_runs"] = inner;
  json pool = json::array();
  for (const auto& e : r.pool)
    pool.push_back({{"digest", e.g.digest()},
                    {"g", candidate_json(e.g)},
                    {"demand", jsonio::from_matrix(e.demand)}});
  j["pool"] = pool;
  if (r.worst_demand.size() > 0) j["worst_demand"] = jsonio::from_matrix(r.worst_demand);
  if (r.worst_plan.placement.size() > 0)
    j["worst_placement"] = jsonio::from_matrix(r.worst_plan.placement);
  return j.dump(2) + "\n";
}

}  // namespace edgeplan
