#include "edgeplan/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "edgeplan/json_io.hpp"

namespace edgeplan {

using json = nlohmann::json;

namespace {

void check_trajectories(const Instance& inst, const std::vector<Eigen::MatrixXd>& trajectories) {
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& lam = trajectories[k];
    if (lam.rows() != inst.aps() || lam.cols() != inst.horizon)
      throw DimensionError("trajectory " + std::to_string(k) + " is " + std::to_string(lam.rows()) + "x" +
                           std::to_string(lam.cols()) + ", expected " + std::to_string(inst.aps()) + "x" +
                           std::to_string(inst.horizon));
  }
}

void summarize(PolicyReport& rep) {
  const auto n = static_cast<double>(rep.samples.size());
  if (rep.samples.empty()) return;
  rep.worst_total = *std::max_element(rep.samples.begin(), rep.samples.end());
  double total = 0.0, pay = 0.0, adj = 0.0;
  for (std::size_t k = 0; k < rep.samples.size(); ++k) {
    total += rep.samples[k];
    pay += rep.breakdowns[k].payment();
    adj += rep.breakdowns[k].adjust;
  }
  rep.mean_total = total / n;
  rep.mean_payment = pay / n;
  rep.mean_adjust = adj / n;
  rep.mean_unserved /= n;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<Eigen::MatrixXd> sample_trajectories(const UncertaintySpec& spec,
                                                 const Eigen::MatrixXd& forecast, int count,
                                                 std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("trajectory count must be nonnegative");
  const AffineDemandMap map = unroll_affine(spec, forecast);
  const Eigen::Index n = static_cast<Eigen::Index>(map.ap_count) * map.periods;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(count));
  Eigen::VectorXd g(n);
  for (int k = 0; k < count; ++k) {
    for (Eigen::Index q = 0; q < n; ++q) g(q) = normal(rng);
    const Eigen::VectorXd flat = map.coefficients * g;
    Eigen::MatrixXd lam = map.offset;
    for (int t = 0; t < map.periods; ++t)
      for (int i = 0; i < map.ap_count; ++i) lam(i, t) += flat(map.flat(i, t));
    out.push_back(lam.cwiseMax(0.0));
  }
  return out;
}

PolicyReport monte_carlo_eval(const Instance& inst, const FirstStage& fs,
                              const std::vector<Eigen::MatrixXd>& trajectories,
                              const std::string& policy, const SolverParams& params,
                              const ModelOptions& opts) {
  check_trajectories(inst, trajectories);
  PolicyReport rep;
  rep.policy = policy;
  for (const auto& lam : trajectories) {
    const RecourseSolution rec = solve_recourse(inst, fs, lam, opts, params);
    const CostBreakdown b = cost_breakdown(inst, fs, rec.plan);
    rep.samples.push_back(b.total);
    rep.breakdowns.push_back(b);
  }
  summarize(rep);
  return rep;
}

PolicyReport monte_carlo_eval(const Instance& inst, const SaroFirstStage& first,
                              const std::vector<Eigen::MatrixXd>& trajectories,
                              const std::string& policy, const SolverParams& params) {
  check_trajectories(inst, trajectories);
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  const double w = inst.costs.resource_per_request;
  const FirstStage fs = saro_as_first_stage(inst, first);
  PolicyReport rep;
  rep.policy = policy;
  for (const auto& lam : trajectories) {
    const BuiltModel bm = build_saro_recourse(inst, first, lam, true);
    const SolveResult res = solve(bm.model, params);
    if (res.status != SolveStatus::kOptimal)
      throw BackendError("static recourse ended with status " + to_string(res.status));
    RecoursePlan rp = RecoursePlan::zeros(I, J, T);
    for (int j = 0; j < J; ++j) {
      rp.placement.row(j).setConstant(first.placement(j));
      if (first.placement(j) > 0.5 && inst.costs.initial_placement[static_cast<std::size_t>(j)] == 0) {
        rp.startup(j, 0) = 1.0;
        rp.download_cloud(j, 0) = 1.0;
      }
    }
    double unserved_cost = 0.0;
    for (int i = 0; i < I; ++i) {
      const double x0 = res.values.at(static_cast<std::size_t>(bm.map.var({"sx0", 0, i})));
      for (int j = 0; j < J; ++j)
        rp.alloc_edge[static_cast<std::size_t>(i)].row(j).setConstant(
            res.values.at(static_cast<std::size_t>(bm.map.var({"sx", 0, i, j}))));
      for (int t = 0; t < T; ++t) {
        // Shortfall is served at the cloud with resources bought on demand.
        const double short_fall = res.values.at(static_cast<std::size_t>(bm.map.var({"unserved", 0, i, t})));
        rp.alloc_cloud(i, t) = x0 + short_fall;
        rp.buy_cloud(t) += w * short_fall;
        unserved_cost += short_fall * (inst.cloud_unit_cost(i) +
                                       w * inst.costs.slot_length * inst.costs.buy_price_cloud(t));
      }
    }
    const CostBreakdown b = cost_breakdown(inst, fs, rp);
    rep.samples.push_back(b.total);
    rep.breakdowns.push_back(b);
    rep.mean_unserved += unserved_cost;
  }
  summarize(rep);
  return rep;
}

PolicyReport evaluate_result(const Instance& inst, const RodResult& result,
                             const std::vector<Eigen::MatrixXd>& trajectories,
                             const SolverParams& params, const ModelOptions& opts) {
  if (result.static_first_stage)
    return monte_carlo_eval(inst, *result.static_first_stage, trajectories, result.model, params);
  return monte_carlo_eval(inst, result.first_stage, trajectories, result.model, params, opts);
}

std::string EvalReport::to_json() const {
  json j;
  j["trajectories"] = trajectories;
  j["seed"] = seed;
  j["policies"] = json::array();
  for (const auto& p : policies) {
    j["policies"].push_back({{"policy", p.policy},
                             {"mean_total", p.mean_total},
                             {"mean_payment", p.mean_payment},
                             {"mean_adjust", p.mean_adjust},
                             {"worst_total", p.worst_total},
                             {"mean_unserved", p.mean_unserved},
                             {"samples", p.samples}});
  }
  return j.dump(2);
}

std::string EvalReport::samples_csv() const {
  std::ostringstream os;
  os << "trajectory";
  for (const auto& p : policies) os << ',' << p.policy;
  os << '\n';
  for (int k = 0; k < trajectories; ++k) {
    os << k;
    for (const auto& p : policies) os << ',' << fmt(p.samples.at(static_cast<std::size_t>(k)));
    os << '\n';
  }
  return os.str();
}

UncertaintySpec with_budget(const UncertaintySpec& spec, int budget) {
  UncertaintySpec out = spec;
  if (out.is_dynamic())
    std::get<DusSpec>(out.set).budget = budget;
  else
    std::get<SusSpec>(out.set).budget = budget;
  return out;
}

CostAxis parse_cost_axis(const std::string& name) {
  if (name == "f" || name == "install") return CostAxis::kInstall;
  if (name == "h" || name == "download") return CostAxis::kDownload;
  if (name == "p" || name == "reserve") return CostAxis::kReserve;
  if (name == "e" || name == "buy") return CostAxis::kBuy;
  throw std::invalid_argument("unknown cost axis '" + name + "'; expected f, h, p or e");
}

std::string to_string(CostAxis axis) {
  switch (axis) {
    case CostAxis::kInstall: return "f";
    case CostAxis::kDownload: return "h";
    case CostAxis::kReserve: return "p";
    case CostAxis::kBuy: return "e";
  }
  return "?";
}

Instance scale_costs(const Instance& inst, CostAxis axis, double factor) {
  if (!(factor >= 0.0) || !std::isfinite(factor)) throw std::invalid_argument("scale factor must be finite and >= 0");
  Instance out = inst;
  auto& c = out.costs;
  switch (axis) {
    case CostAxis::kInstall:
      c.install_cost *= factor;
      break;
    case CostAxis::kDownload:
      for (auto& m : c.download_en) m *= factor;
      c.download_cloud *= factor;
      break;
    case CostAxis::kReserve:
      c.reserve_price_edge *= factor;
      c.reserve_price_cloud *= factor;
      c.buy_price_edge = c.buy_price_edge.cwiseMax(c.reserve_price_edge);
      c.buy_price_cloud = c.buy_price_cloud.cwiseMax(c.reserve_price_cloud);
      break;
    case CostAxis::kBuy:
      c.buy_price_edge *= factor;
      c.buy_price_cloud *= factor;
      c.reserve_price_edge = c.reserve_price_edge.cwiseMin(c.buy_price_edge);
      c.reserve_price_cloud = c.reserve_price_cloud.cwiseMin(c.buy_price_cloud);
      break;
  }
  c.sell_price_edge = c.sell_price_edge.cwiseMin(c.reserve_price_edge);
  c.sell_price_cloud = c.sell_price_cloud.cwiseMin(c.reserve_price_cloud);
  validate_instance(out);
  return out;
}

namespace {

SweepRow row_of(const std::string& axis, double value, const RodResult& r) {
  SweepRow row;
  row.axis = axis;
  row.value = value;
  row.model = r.model;
  row.objective = r.objective;
  row.lower_bound = r.lower_bound;
  row.gap = r.gap;
  row.converged = r.converged;
  row.breakdown = r.breakdown;
  return row;
}

}  // namespace

std::vector<SweepRow> gamma_sweep(const Instance& inst, Baseline which, const std::vector<int>& budgets,
                                  const RodConfig& cfg) {
  std::vector<SweepRow> rows;
  for (int budget : budgets) {
    const UncertaintySpec spec = with_budget(inst.uncertainty, budget);
    const RodResult r = solve_baseline(inst, which, spec, cfg);
    rows.push_back(row_of("gamma", budget, r));
  }
  return rows;
}

std::vector<SweepRow> cost_sweep(const Instance& inst, Baseline which, CostAxis axis,
                                 const std::vector<double>& factors, const RodConfig& cfg) {
  std::vector<SweepRow> rows;
  for (double f : factors) {
    const Instance scaled = scale_costs(inst, axis, f);
    const RodResult r = solve_baseline(scaled, which, scaled.uncertainty, cfg);
    rows.push_back(row_of(to_string(axis), f, r));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "axis,value,model,objective,lower_bound,gap,converged,reserve,adjust,install,download,storage,"
        "delay,bandwidth,payment\n";
  for (const auto& r : rows) {
    const auto& b = r.breakdown;
    os << r.axis << ',' << fmt(r.value) << ',' << r.model << ',' << fmt(r.objective) << ','
       << fmt(r.lower_bound) << ',' << fmt(r.gap) << ',' << (r.converged ? 1 : 0) << ',' << fmt(b.reserve)
       << ',' << fmt(b.adjust) << ',' << fmt(b.install) << ',' << fmt(b.download) << ','
       << fmt(b.storage) << ',' << fmt(b.delay) << ',' << fmt(b.bandwidth) << ',' << fmt(b.payment())
       << '\n';
  }
  return os.str();
}

}  // namespace edgeplan
