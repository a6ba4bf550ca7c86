#include "edgeplan/models.hpp"

#include <algorithm>
#include <cmath>

namespace edgeplan {

std::string VarKey::name() const {
  std::string out = kind;
  if (copy >= 0) out += "_l" + std::to_string(copy);
  for (int v : {a, b, c})
    if (v >= 0) out += "_" + std::to_string(v);
  return out;
}

void VarMap::bind_var(const VarKey& key, int index) {
  if (!vars_.emplace(key, index).second) throw ModelError("duplicate variable key " + key.name());
  var_keys_.emplace(index, key);
}

void VarMap::bind_row(const VarKey& key, int index) {
  if (!rows_.emplace(key, index).second) throw ModelError("duplicate row key " + key.name());
}

int VarMap::var(const VarKey& key) const {
  auto it = vars_.find(key);
  if (it == vars_.end()) throw ModelError("no variable for key " + key.name());
  return it->second;
}

int VarMap::row(const VarKey& key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) throw ModelError("no row for key " + key.name());
  return it->second;
}

std::optional<int> VarMap::find_var(const VarKey& key) const {
  auto it = vars_.find(key);
  if (it == vars_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> VarMap::find_row(const VarKey& key) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

const VarKey& VarMap::key_of_var(int index) const {
  auto it = var_keys_.find(index);
  if (it == var_keys_.end()) throw ModelError("variable index has no key");
  return it->second;
}

double BinaryPoint::fixed_cost(const Instance& inst) const {
  const auto& c = inst.costs;
  double total = 0.0;
  for (int j = 0; j < inst.ens(); ++j)
    for (int t = 0; t < inst.horizon; ++t) {
      total += c.install_cost(j, t) * startup(j, t) + c.storage_cost(j, t) * placement(j, t) +
               c.download_cloud(j, t) * download_cloud(j, t);
      for (int m = 0; m < inst.ens(); ++m)
        if (m != j) total += c.download_en[m](j, t) * download_en[m](j, t);
    }
  return total;
}

bool operator==(const BinaryPoint& a, const BinaryPoint& b) {
  if (a.download_en.size() != b.download_en.size()) return false;
  for (std::size_t m = 0; m < a.download_en.size(); ++m)
    if (a.download_en[m] != b.download_en[m]) return false;
  return a.placement == b.placement && a.download_cloud == b.download_cloud &&
         a.startup == b.startup;
}

namespace {

struct Builder {
  LinearModel& m;
  VarMap& map;

  int var(const VarKey& key, double lo, double hi, bool integer = false) {
    const int idx = m.add_variable(key.name(), lo, hi, integer);
    map.bind_var(key, idx);
    return idx;
  }
  int row(const VarKey& key, const LinExpr& lhs, Sense sense, double rhs) {
    const int idx = m.add_constraint(key.name(), lhs, sense, rhs);
    map.bind_row(key, idx);
    return idx;
  }
};

LinExpr constant(double v) {
  LinExpr e;
  e.constant = v;
  return e;
}

LinExpr single(int var, double coef = 1.0) {
  LinExpr e;
  e.add(var, coef);
  return e;
}

// Reservation and placement as expressions: constants when fixed, variables
// when decided by the model.
struct Grid {
  std::vector<std::vector<LinExpr>> edge;  // [j][t]
  std::vector<LinExpr> cloud;              // [t]
};

Grid fixed_reservation(const Instance& inst, const FirstStage& fs) {
  if (fs.edge.rows() != inst.ens() || fs.edge.cols() != inst.horizon ||
      fs.cloud.size() != inst.horizon)
    throw DimensionError("first stage does not match the instance");
  Grid g;
  g.edge.resize(inst.ens());
  for (int j = 0; j < inst.ens(); ++j)
    for (int t = 0; t < inst.horizon; ++t) g.edge[j].push_back(constant(fs.edge(j, t)));
  for (int t = 0; t < inst.horizon; ++t) g.cloud.push_back(constant(fs.cloud(t)));
  return g;
}

Grid reservation_variables(Builder& b, const Instance& inst, const ModelOptions& opts,
                           LinExpr& reserve_cost) {
  const auto& c = inst.costs;
  Grid g;
  g.edge.resize(inst.ens());
  for (int t = 0; t < inst.horizon; ++t) {
    for (int j = 0; j < inst.ens(); ++j) {
      const int s = b.var({"s", -1, j, t}, 0.0, c.capacity(j));
      g.edge[j].push_back(single(s));
      reserve_cost.add(s, c.slot_length * c.reserve_price_edge(j, t));
      if (opts.time_constant && t > 0)
        b.row({"s_const", -1, j, t}, single(s).add(b.map.var({"s", -1, j, t - 1}), -1.0),
              Sense::kEqual, 0.0);
    }
    const int s0 = b.var({"s0", -1, t}, 0.0, kInf);
    g.cloud.push_back(single(s0));
    reserve_cost.add(s0, c.slot_length * c.reserve_price_cloud(t));
    if (opts.time_constant && t > 0)
      b.row({"s0_const", -1, t}, single(s0).add(b.map.var({"s0", -1, t - 1}), -1.0),
            Sense::kEqual, 0.0);
  }
  return g;
}

void check_demand(const Instance& inst, const Eigen::MatrixXd& demand) {
  if (demand.rows() != inst.aps() || demand.cols() != inst.horizon)
    throw DimensionError("demand must be I x T");
}

// Placement, startup and download binaries of one recourse copy. Returns the
// placement grid; adds the install/download/storage cost to `cost`.
Grid add_binary_block(Builder& b, const Instance& inst, int copy, const ModelOptions& opts,
                      LinExpr& cost) {
  const int J = inst.ens(), T = inst.horizon;
  const auto& c = inst.costs;
  Grid z;
  z.edge.resize(J);
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      const int zv = b.var({"z", copy, j, t}, 0.0, 1.0, true);
      const int uv = b.var({"u", copy, j, t}, 0.0, 1.0, true);
      const int q0 = b.var({"q0", copy, j, t}, 0.0, 1.0, true);
      z.edge[j].push_back(single(zv));
      cost.add(uv, c.install_cost(j, t));
      cost.add(zv, c.storage_cost(j, t));
      cost.add(q0, c.download_cloud(j, t));
      for (int m = 0; m < J; ++m) {
        if (m == j) continue;
        const int q = b.var({"q", copy, m, j, t}, 0.0, 1.0, true);
        cost.add(q, c.download_en[m](j, t));
      }
    }
  auto prev = [&](int j, int t) {
    return t == 0 ? constant(c.initial_placement[j]) : z.edge[j][t - 1];
  };
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < J; ++j) {
      // New placement (z[t] - z[t-1]) needs a startup and a download source.
      LinExpr rise = z.edge[j][t];
      rise.add(prev(j, t), -1.0);
      LinExpr st = single(b.map.var({"u", copy, j, t}));
      st.add(rise, -1.0);
      b.row({"startup", copy, j, t}, st, Sense::kGreaterEqual, 0.0);
      LinExpr req = single(b.map.var({"q0", copy, j, t}));
      for (int m = 0; m < J; ++m)
        if (m != j) req.add(b.map.var({"q", copy, m, j, t}), 1.0);
      req.add(rise, -1.0);
      b.row({"dl_req", copy, j, t}, req, Sense::kGreaterEqual, 0.0);
      // A node can serve downloads only if it held the service at t-1.
      if (J > 1) {
        LinExpr src;
        for (int k = 0; k < J; ++k)
          if (k != j) src.add(b.map.var({"q", copy, j, k, t}), 1.0);
        src.add(prev(j, t), -1.0);
        b.row({"dl_src", copy, j, t}, src, Sense::kLessEqual, 0.0);
      }
      if (opts.time_constant && t > 0) {
        LinExpr eq = z.edge[j][t];
        eq.add(z.edge[j][t - 1], -1.0);
        b.row({"z_const", copy, j, t}, eq, Sense::kEqual, 0.0);
      }
    }
  return z;
}

// Allocation and adjustment variables of one recourse copy with their
// coverage, capacity, balance and sell-back rows. Adds adjustment, delay and
// bandwidth cost to `cost`.
void add_allocation_block(Builder& b, const Instance& inst, int copy, const Grid& s,
                          const Grid& z, const Eigen::MatrixXd& demand, const ModelOptions& opts,
                          LinExpr& cost) {
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  const auto& c = inst.costs;
  const double d = c.slot_length, w = c.resource_per_request;
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < I; ++i) {
      const int x0 = b.var({"x0", copy, i, t}, 0.0, kInf);
      cost.add(x0, inst.cloud_unit_cost(i));
      for (int j = 0; j < J; ++j) {
        const int x = b.var({"x", copy, i, j, t}, 0.0, kInf);
        cost.add(x, inst.edge_unit_cost(i, j));
      }
    }
    for (int j = 0; j < J; ++j) {
      const int yb = b.var({"yB", copy, j, t}, 0.0, kInf);
      const int ys = b.var({"yS", copy, j, t}, 0.0, kInf);
      cost.add(yb, d * c.buy_price_edge(j, t));
      cost.add(ys, -d * c.sell_price_edge(j, t));
    }
    const int yb0 = b.var({"yB0", copy, t}, 0.0, kInf);
    const int ys0 = b.var({"yS0", copy, t}, 0.0, kInf);
    cost.add(yb0, d * c.buy_price_cloud(t));
    cost.add(ys0, -d * c.sell_price_cloud(t));
  }
  for (int t = 0; t < T; ++t) {
    for (int i = 0; i < I; ++i) {
      LinExpr cover = single(b.map.var({"x0", copy, i, t}));
      for (int j = 0; j < J; ++j) cover.add(b.map.var({"x", copy, i, j, t}), 1.0);
      b.row({"cover", copy, i, t}, cover, Sense::kGreaterEqual, demand(i, t));
    }
    for (int j = 0; j < J; ++j) {
      const int yb = b.map.var({"yB", copy, j, t});
      const int ys = b.map.var({"yS", copy, j, t});
      // s + yB - yS <= C z
      LinExpr cap = s.edge[j][t];
      cap.add(yb, 1.0).add(ys, -1.0).add(z.edge[j][t], -c.capacity(j));
      b.row({"cap", copy, j, t}, cap, Sense::kLessEqual, 0.0);
      // yS <= s
      LinExpr sell = single(ys);
      sell.add(s.edge[j][t], -1.0);
      b.row({"sell", copy, j, t}, sell, Sense::kLessEqual, 0.0);
      // w sum_i x <= s + yB - yS
      LinExpr bal;
      for (int i = 0; i < I; ++i) bal.add(b.map.var({"x", copy, i, j, t}), w);
      bal.add(yb, -1.0).add(ys, 1.0).add(s.edge[j][t], -1.0);
      b.row({"edge_bal", copy, j, t}, bal, Sense::kLessEqual, 0.0);
    }
    const int yb0 = b.map.var({"yB0", copy, t});
    const int ys0 = b.map.var({"yS0", copy, t});
    LinExpr cbal;
    for (int i = 0; i < I; ++i) cbal.add(b.map.var({"x0", copy, i, t}), w);
    cbal.add(yb0, -1.0).add(ys0, 1.0).add(s.cloud[t], -1.0);
    b.row({"cloud_bal", copy, t}, cbal, Sense::kLessEqual, 0.0);
    LinExpr csell = single(ys0);
    csell.add(s.cloud[t], -1.0);
    b.row({"cloud_sell", copy, t}, csell, Sense::kLessEqual, 0.0);
    if (opts.time_constant && t > 0) {
      for (int i = 0; i < I; ++i) {
        for (int j = 0; j < J; ++j) {
          LinExpr eq = single(b.map.var({"x", copy, i, j, t}));
          eq.add(b.map.var({"x", copy, i, j, t - 1}), -1.0);
          b.row({"x_const", copy, i, j, t}, eq, Sense::kEqual, 0.0);
        }
        LinExpr eq0 = single(b.map.var({"x0", copy, i, t}));
        eq0.add(b.map.var({"x0", copy, i, t - 1}), -1.0);
        b.row({"x0_const", copy, i, t}, eq0, Sense::kEqual, 0.0);
      }
    }
  }
}

Grid fixed_placement(const Instance& inst, const BinaryPoint& bin) {
  if (bin.placement.rows() != inst.ens() || bin.placement.cols() != inst.horizon)
    throw DimensionError("binary point does not match the instance");
  Grid g;
  g.edge.resize(inst.ens());
  for (int j = 0; j < inst.ens(); ++j)
    for (int t = 0; t < inst.horizon; ++t) g.edge[j].push_back(constant(bin.placement(j, t)));
  return g;
}

void add_driver_pairs(Builder& b, int I, int T, int budget) {
  for (int t = 0; t < T; ++t) {
    LinExpr used;
    for (int i = 0; i < I; ++i) {
      const int gp = b.var({"gp", -1, i, t}, 0.0, 1.0, true);
      const int gm = b.var({"gm", -1, i, t}, 0.0, 1.0, true);
      b.row({"g_pair", -1, i, t}, single(gp).add(gm, 1.0), Sense::kLessEqual, 1.0);
      used.add(gp, 1.0).add(gm, 1.0);
    }
    b.row({"g_budget", -1, t}, used, Sense::kLessEqual, budget);
  }
}

}  // namespace

double reservation_cost(const Instance& inst, const FirstStage& fs) {
  const auto& c = inst.costs;
  double total = 0.0;
  for (int t = 0; t < inst.horizon; ++t) {
    for (int j = 0; j < inst.ens(); ++j)
      total += c.slot_length * c.reserve_price_edge(j, t) * fs.edge(j, t);
    total += c.slot_length * c.reserve_price_cloud(t) * fs.cloud(t);
  }
  return total;
}

BuiltModel build_det(const Instance& inst, const Eigen::MatrixXd& demand,
                     const ModelOptions& opts) {
  check_demand(inst, demand);
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  LinExpr obj;
  const Grid s = reservation_variables(b, inst, opts, obj);
  const Grid z = add_binary_block(b, inst, 0, opts, obj);
  add_allocation_block(b, inst, 0, s, z, demand, opts, obj);
  bm.model.set_objective(ObjSense::kMinimize, obj);
  return bm;
}

BuiltModel build_innermost_lp(const Instance& inst, const FirstStage& fs, const BinaryPoint& bin,
                              const Eigen::MatrixXd& demand, const ModelOptions& opts) {
  check_demand(inst, demand);
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  LinExpr obj = constant(bin.fixed_cost(inst));
  add_allocation_block(b, inst, 0, fixed_reservation(inst, fs), fixed_placement(inst, bin), demand,
                       opts, obj);
  bm.model.set_objective(ObjSense::kMinimize, obj);
  return bm;
}

BuiltModel build_outer_mp(const Instance& inst, const std::vector<Eigen::MatrixXd>& pool,
                          const ModelOptions& opts) {
  if (pool.empty()) throw ModelError("outer master needs at least one scenario");
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  LinExpr obj;
  const Grid s = reservation_variables(b, inst, opts, obj);
  const int eta = b.var({"eta"}, -kInf, kInf);
  obj.add(eta, 1.0);
  for (std::size_t l = 0; l < pool.size(); ++l) {
    check_demand(inst, pool[l]);
    const int copy = static_cast<int>(l);
    LinExpr second;
    const Grid z = add_binary_block(b, inst, copy, opts, second);
    add_allocation_block(b, inst, copy, s, z, pool[l], opts, second);
    LinExpr epi = single(eta);
    epi.add(second, -1.0);
    b.row({"epigraph", copy}, epi, Sense::kGreaterEqual, 0.0);
  }
  bm.model.set_objective(ObjSense::kMinimize, obj);
  return bm;
}

BuiltModel build_inner_sp(const Instance& inst, const FirstStage& fs,
                          const Eigen::MatrixXd& demand, const ModelOptions& opts) {
  check_demand(inst, demand);
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  LinExpr obj;
  const Grid z = add_binary_block(b, inst, 0, opts, obj);
  add_allocation_block(b, inst, 0, fixed_reservation(inst, fs), z, demand, opts, obj);
  bm.model.set_objective(ObjSense::kMinimize, obj);
  return bm;
}

namespace {

BinaryPoint zero_binaries(const Instance& inst) {
  const Eigen::MatrixXd jt = Eigen::MatrixXd::Zero(inst.ens(), inst.horizon);
  return {jt, std::vector<Eigen::MatrixXd>(inst.ens(), jt), jt, jt};
}

Eigen::MatrixXi cover_duals(const Instance& inst, const VarMap& primal, const DualModel& dual) {
  Eigen::MatrixXi out(inst.aps(), inst.horizon);
  for (int i = 0; i < inst.aps(); ++i)
    for (int t = 0; t < inst.horizon; ++t) out(i, t) = dual.row_dual.at(primal.row({"cover", 0, i, t}));
  return out;
}

}  // namespace

DemandDualBounds derive_demand_dual_bounds(const Instance& inst, const ModelOptions& opts,
                                           const SolverParams& params) {
  // The dual polyhedron does not depend on reservation, binaries or demand,
  // which only enter the primal right-hand sides.
  const BuiltModel lp = build_innermost_lp(inst, FirstStage::zeros(inst.ens(), inst.horizon),
                                           zero_binaries(inst),
                                           Eigen::MatrixXd::Zero(inst.aps(), inst.horizon), opts);
  DualModel dual = dualize(lp.model);
  const Eigen::MatrixXi cover = cover_duals(inst, lp.map, dual);
  DemandDualBounds out{Eigen::MatrixXd::Zero(inst.aps(), inst.horizon)};
  for (int i = 0; i < inst.aps(); ++i)
    for (int t = 0; t < inst.horizon; ++t) {
      dual.model.set_objective(ObjSense::kMaximize, single(cover(i, t)));
      const SolveResult res = solve(dual.model, params);
      if (res.status != SolveStatus::kOptimal)
        throw ModelError("coverage dual for area " + std::to_string(i) + ", period " +
                         std::to_string(t) + " has no finite bound (" + to_string(res.status) + ")");
      out.upper(i, t) = std::max(0.0, res.objective);
    }
  return out;
}

CutPoint make_cut(const Instance& inst, const FirstStage& fs, const BinaryPoint& bin,
                  const Eigen::MatrixXd& offset, const ModelOptions& opts) {
  const BuiltModel lp = build_innermost_lp(inst, fs, bin, offset, opts);
  CutPoint cut;
  cut.binaries = bin;
  cut.fixed_cost = bin.fixed_cost(inst);
  cut.dual = dualize(lp.model);
  cut.cover_dual = cover_duals(inst, lp.map, cut.dual);
  return cut;
}

BuiltModel build_inner_mp(const Instance& inst, const std::vector<CutPoint>& cuts,
                          const AffineDemandMap& demand_map, int budget,
                          const DemandDualBounds& bounds) {
  if (cuts.empty()) throw ModelError("inner master needs at least one cut");
  const int I = inst.aps(), T = inst.horizon;
  if (demand_map.ap_count != I || demand_map.periods != T)
    throw DimensionError("demand map does not match the instance");
  if (bounds.upper.rows() != I || bounds.upper.cols() != T)
    throw ModelError("coverage dual bounds are missing");
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t)
      if (!std::isfinite(bounds.upper(i, t)) || bounds.upper(i, t) < 0)
        throw ModelError("coverage dual bound for area " + std::to_string(i) + ", period " +
                         std::to_string(t) + " is not finite");

  BuiltModel bm;
  Builder b{bm.model, bm.map};
  add_driver_pairs(b, I, T, budget);
  const int tau = b.var({"tau"}, -kInf, kInf);

  for (std::size_t n = 0; n < cuts.size(); ++n) {
    const CutPoint& cut = cuts[n];
    const int k = static_cast<int>(n);
    const LinearModel& dm = cut.dual.model;
    const std::string prefix = "k" + std::to_string(k) + "_";
    std::vector<int> remap(dm.num_variables());
    for (int v = 0; v < dm.num_variables(); ++v) {
      const auto& var = dm.variable(v);
      remap[v] = bm.model.add_variable(prefix + var.name, var.lower, var.upper);
    }
    for (int i = 0; i < I; ++i)
      for (int t = 0; t < T; ++t) {
        const int sigma = remap[cut.cover_dual(i, t)];
        bm.map.bind_var({"sigma", k, i, t}, sigma);
        bm.model.set_bounds(sigma, 0.0, bounds.upper(i, t));
      }
    for (const auto& c : dm.constraints()) {
      std::vector<Term> terms;
      terms.reserve(c.terms.size());
      for (const auto& tm : c.terms) terms.push_back({remap[tm.var], tm.coef});
      bm.model.add_constraint(prefix + c.name, std::move(terms), c.sense, c.rhs);
    }
    LinExpr value = constant(dm.objective().constant);
    for (const auto& tm : dm.objective().terms) value.add(remap[tm.var], tm.coef);

    // Driver-dependent part: sum over (i2, tau2) of v * g, v = sum psi * sigma.
    for (int tau2 = 0; tau2 < T; ++tau2)
      for (int i2 = 0; i2 < I; ++i2) {
        LinExpr v;
        double lo = 0.0, hi = 0.0;
        for (int t = tau2; t < T; ++t)
          for (int i = 0; i < I; ++i) {
            const double psi = demand_map.coef(i, t, i2, tau2);
            if (psi == 0.0) continue;
            v.add(bm.map.var({"sigma", k, i, t}), psi);
            (psi > 0 ? hi : lo) += psi * bounds.upper(i, t);
          }
        if (v.terms.empty() || (lo == 0.0 && hi == 0.0)) continue;
        for (int sign : {1, -1}) {
          const int g = bm.map.var({sign > 0 ? "gp" : "gm", -1, i2, tau2});
          const std::string kind = sign > 0 ? "zeta_p" : "zeta_m";
          const int zeta = b.var({kind, k, i2, tau2}, lo, hi);
          // zeta = v * g for binary g and v in [lo, hi].
          b.row({kind + "_ub_g", k, i2, tau2}, single(zeta).add(g, -hi), Sense::kLessEqual, 0.0);
          b.row({kind + "_lb_g", k, i2, tau2}, single(zeta).add(g, -lo), Sense::kGreaterEqual, 0.0);
          LinExpr e1 = single(zeta);
          e1.add(v, -1.0).add(g, -lo);
          b.row({kind + "_ub_v", k, i2, tau2}, e1, Sense::kLessEqual, -lo);
          LinExpr e2 = single(zeta);
          e2.add(v, -1.0).add(g, -hi);
          b.row({kind + "_lb_v", k, i2, tau2}, e2, Sense::kGreaterEqual, -hi);
          value.add(zeta, sign);
        }
      }
    LinExpr row = single(tau);
    row.add(value, -1.0);
    b.row({"cut", k}, row, Sense::kLessEqual, 0.0);
  }
  bm.model.set_objective(ObjSense::kMaximize, single(tau));
  return bm;
}

BuiltModel build_extreme_scenario(const UncertaintySpec& spec, const Eigen::MatrixXd& forecast) {
  const int I = static_cast<int>(forecast.rows()), T = static_cast<int>(forecast.cols());
  auto problems = check_uncertainty(spec, I, T);
  if (!problems.empty()) throw ModelError("invalid uncertainty set: " + problems.front());
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  add_driver_pairs(b, I, T, spec.budget());
  LinExpr obj = constant(forecast.sum());
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < I; ++i) obj.add(b.var({"res", -1, i, t}, -kInf, kInf), 1.0);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < I; ++i) {
      LinExpr row = single(bm.map.var({"res", -1, i, t}));
      double rhs = 0.0;
      if (!spec.is_dynamic()) {
        const double dev = spec.sus().deviation(i, t);
        row.add(bm.map.var({"gp", -1, i, t}), -dev).add(bm.map.var({"gm", -1, i, t}), dev);
      } else {
        const auto& d = spec.dus();
        for (int s = 1; s <= d.lag; ++s) {
          if (t - s >= 0) row.add(bm.map.var({"res", -1, i, t - s}), -d.ar(i, s - 1));
          else rhs += d.ar(i, s - 1) * d.seed_residuals(i, t - s + d.lag);
        }
        for (int k = 0; k < I; ++k) {
          row.add(bm.map.var({"gp", -1, k, t}), -d.mixing(i, k));
          row.add(bm.map.var({"gm", -1, k, t}), d.mixing(i, k));
        }
      }
      b.row({"recursion", -1, i, t}, row, Sense::kEqual, rhs);
    }
  bm.model.set_objective(ObjSense::kMaximize, obj);
  return bm;
}

GCandidate extract_candidate(const VarMap& map, const SolveResult& res, int I, int T) {
  GCandidate g = GCandidate::zeros(I, T);
  for (int i = 0; i < I; ++i)
    for (int t = 0; t < T; ++t)
      g.g(i, t) = static_cast<int>(std::lround(res.values.at(map.var({"gp", -1, i, t})))) -
                  static_cast<int>(std::lround(res.values.at(map.var({"gm", -1, i, t}))));
  return g;
}

FirstStage extract_first_stage(const Instance& inst, const VarMap& map, const SolveResult& res) {
  FirstStage fs = FirstStage::zeros(inst.ens(), inst.horizon);
  for (int t = 0; t < inst.horizon; ++t) {
    for (int j = 0; j < inst.ens(); ++j)
      fs.edge(j, t) = std::clamp(res.values.at(map.var({"s", -1, j, t})), 0.0,
                                 inst.costs.capacity(j));
    fs.cloud(t) = std::max(0.0, res.values.at(map.var({"s0", -1, t})));
  }
  return fs;
}

RecoursePlan extract_recourse(const Instance& inst, const VarMap& map, const SolveResult& res,
                              int copy) {
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  RecoursePlan rp = RecoursePlan::zeros(I, J, T);
  auto val = [&](const VarKey& k) { return res.values.at(map.var(k)); };
  auto opt = [&](const VarKey& k) {
    auto idx = map.find_var(k);
    return idx ? res.values.at(*idx) : 0.0;
  };
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      rp.placement(j, t) = opt({"z", copy, j, t});
      rp.startup(j, t) = opt({"u", copy, j, t});
      rp.download_cloud(j, t) = opt({"q0", copy, j, t});
      for (int m = 0; m < J; ++m)
        if (m != j) rp.download_en[m](j, t) = opt({"q", copy, m, j, t});
      rp.buy_edge(j, t) = val({"yB", copy, j, t});
      rp.sell_edge(j, t) = val({"yS", copy, j, t});
    }
    rp.buy_cloud(t) = val({"yB0", copy, t});
    rp.sell_cloud(t) = val({"yS0", copy, t});
    for (int i = 0; i < I; ++i) {
      rp.alloc_cloud(i, t) = val({"x0", copy, i, t});
      for (int j = 0; j < J; ++j) rp.alloc_edge[i](j, t) = val({"x", copy, i, j, t});
    }
  }
  return rp;
}

BinaryPoint extract_binaries(const Instance& inst, const VarMap& map, const SolveResult& res,
                             int copy) {
  BinaryPoint bin = zero_binaries(inst);
  auto val = [&](const VarKey& k) { return std::round(res.values.at(map.var(k))); };
  for (int t = 0; t < inst.horizon; ++t)
    for (int j = 0; j < inst.ens(); ++j) {
      bin.placement(j, t) = val({"z", copy, j, t});
      bin.startup(j, t) = val({"u", copy, j, t});
      bin.download_cloud(j, t) = val({"q0", copy, j, t});
      for (int m = 0; m < inst.ens(); ++m)
        if (m != j) bin.download_en[m](j, t) = val({"q", copy, m, j, t});
    }
  return bin;
}

RecourseSolution solve_recourse(const Instance& inst, const FirstStage& fs,
                                const Eigen::MatrixXd& demand, const ModelOptions& opts,
                                const SolverParams& params) {
  const BuiltModel sp = build_inner_sp(inst, fs, demand, opts);
  const SolveResult mip = solve(sp.model, params);
  if (!mip.has_solution() || mip.status != SolveStatus::kOptimal)
    throw BackendError("recourse MILP ended with status " + to_string(mip.status));
  const SolveResult lp = polish_integers(sp.model, mip, params);
  if (lp.status != SolveStatus::kOptimal)
    throw BackendError("recourse LP at fixed binaries ended with status " + to_string(lp.status));
  RecourseSolution out;
  out.value = lp.objective;
  out.binaries = extract_binaries(inst, sp.map, lp, 0);
  out.plan = extract_recourse(inst, sp.map, lp, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Static robust baseline

double saro_placement_cost(const Instance& inst, int j) {
  const auto& c = inst.costs;
  double cost = c.storage_cost.row(j).sum();
  if (c.initial_placement[j] == 0) cost += c.install_cost(j, 0) + c.download_cloud(j, 0);
  return cost;
}

double saro_required_requests(const Instance& inst, const SusSpec& sus,
                              const SolverParams& params) {
  // max over drivers of sum_i max(0, max_t lambda[i][t]); only upward
  // deviations can raise a maximum, and forecasts are nonnegative.
  const int I = inst.aps(), T = inst.horizon;
  if (sus.budget == 0) {
    double total = 0.0;
    for (int i = 0; i < I; ++i) total += std::max(0.0, inst.forecast.row(i).maxCoeff());
    return total;
  }
  LinearModel m;
  VarMap map;
  Builder b{m, map};
  LinExpr obj;
  for (int t = 0; t < T; ++t) {
    LinExpr used;
    for (int i = 0; i < I; ++i) used.add(b.var({"gp", -1, i, t}, 0.0, 1.0, true), 1.0);
    b.row({"g_budget", -1, t}, used, Sense::kLessEqual, sus.budget);
  }
  for (int i = 0; i < I; ++i) {
    LinExpr pick;
    for (int t = 0; t < T; ++t) {
      const int y = b.var({"peak", -1, i, t}, 0.0, 1.0, true);
      const int w = b.var({"peak_dev", -1, i, t}, 0.0, 1.0);
      b.row({"peak_dev_y", -1, i, t}, single(w).add(y, -1.0), Sense::kLessEqual, 0.0);
      b.row({"peak_dev_g", -1, i, t}, single(w).add(map.var({"gp", -1, i, t}), -1.0),
            Sense::kLessEqual, 0.0);
      pick.add(y, 1.0);
      obj.add(y, inst.forecast(i, t)).add(w, sus.deviation(i, t));
    }
    b.row({"peak_one", -1, i}, pick, Sense::kLessEqual, 1.0);
  }
  m.set_objective(ObjSense::kMaximize, obj);
  const SolveResult res = solve(m, params);
  if (!res.optimal()) throw BackendError("peak-demand MILP ended with status " + to_string(res.status));
  return res.objective;
}

namespace {

void add_static_allocation(Builder& b, const Instance& inst, int copy, const LinExpr* s_edge,
                           const LinExpr& s_cloud, const Eigen::MatrixXd& demand,
                           bool allow_unserved, LinExpr& cost) {
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  const double w = inst.costs.resource_per_request;
  for (int i = 0; i < I; ++i) {
    const int x0 = b.var({"sx0", copy, i}, 0.0, kInf);
    cost.add(x0, T * inst.cloud_unit_cost(i));
    for (int j = 0; j < J; ++j) cost.add(b.var({"sx", copy, i, j}, 0.0, kInf), T * inst.edge_unit_cost(i, j));
  }
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < I; ++i) {
      LinExpr cover = single(b.map.var({"sx0", copy, i}));
      for (int j = 0; j < J; ++j) cover.add(b.map.var({"sx", copy, i, j}), 1.0);
      if (allow_unserved) {
        const int u = b.var({"unserved", copy, i, t}, 0.0, kInf);
        cover.add(u, 1.0);
        cost.add(u, inst.cloud_unit_cost(i) +
                        w * inst.costs.slot_length * inst.costs.buy_price_cloud(t));
      }
      b.row({"cover", copy, i, t}, cover, Sense::kGreaterEqual, demand(i, t));
    }
  for (int j = 0; j < J; ++j) {
    LinExpr cap;
    for (int i = 0; i < I; ++i) cap.add(b.map.var({"sx", copy, i, j}), w);
    cap.add(s_edge[j], -1.0);
    b.row({"static_cap", copy, j}, cap, Sense::kLessEqual, 0.0);
  }
  LinExpr ccap;
  for (int i = 0; i < I; ++i) ccap.add(b.map.var({"sx0", copy, i}), w);
  ccap.add(s_cloud, -1.0);
  b.row({"static_cloud", copy}, ccap, Sense::kLessEqual, 0.0);
}

}  // namespace

BuiltModel build_saro_master(const Instance& inst, const std::vector<Eigen::MatrixXd>& pool,
                             double required_requests) {
  if (pool.empty()) throw ModelError("static master needs at least one scenario");
  const int J = inst.ens();
  const auto& c = inst.costs;
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  LinExpr obj;
  std::vector<LinExpr> s_edge(J);
  LinExpr total_res;
  for (int j = 0; j < J; ++j) {
    const int z = b.var({"zs", -1, j}, 0.0, 1.0, true);
    const int s = b.var({"ss", -1, j}, 0.0, c.capacity(j));
    obj.add(z, saro_placement_cost(inst, j));
    obj.add(s, c.slot_length * c.reserve_price_edge.row(j).sum());
    b.row({"static_place", -1, j}, single(s).add(z, -c.capacity(j)), Sense::kLessEqual, 0.0);
    s_edge[j] = single(s);
    total_res.add(s, 1.0);
  }
  const int s0 = b.var({"ss0"}, 0.0, kInf);
  obj.add(s0, c.slot_length * c.reserve_price_cloud.sum());
  total_res.add(s0, 1.0);
  b.row({"static_required"}, total_res, Sense::kGreaterEqual,
        c.resource_per_request * required_requests);
  const int eta = b.var({"eta"}, -kInf, kInf);
  obj.add(eta, 1.0);
  for (std::size_t l = 0; l < pool.size(); ++l) {
    check_demand(inst, pool[l]);
    const int copy = static_cast<int>(l);
    LinExpr second;
    add_static_allocation(b, inst, copy, s_edge.data(), single(s0), pool[l], false, second);
    LinExpr epi = single(eta);
    epi.add(second, -1.0);
    b.row({"epigraph", copy}, epi, Sense::kGreaterEqual, 0.0);
  }
  bm.model.set_objective(ObjSense::kMinimize, obj);
  return bm;
}

BuiltModel build_saro_recourse(const Instance& inst, const SaroFirstStage& first,
                               const Eigen::MatrixXd& demand, bool allow_unserved) {
  check_demand(inst, demand);
  if (first.edge.size() != inst.ens() || first.placement.size() != inst.ens())
    throw DimensionError("static first stage does not match the instance");
  BuiltModel bm;
  Builder b{bm.model, bm.map};
  std::vector<LinExpr> s_edge(inst.ens());
  for (int j = 0; j < inst.ens(); ++j) s_edge[j] = constant(first.edge(j));
  LinExpr obj;
  // Copy index 0 keeps the coverage rows addressable like the dynamic models.
  add_static_allocation(b, inst, 0, s_edge.data(), constant(first.cloud), demand, allow_unserved,
                        obj);
  bm.model.set_objective(ObjSense::kMinimize, obj);
  return bm;
}

DemandDualBounds saro_demand_dual_bounds(const Instance& inst) {
  // Shifting every capacity dual down by their minimum keeps a dual optimum
  // whenever the total reservation covers the peak requirement, so some node
  // has a zero capacity price and sum_t sigma[i][t] <= T * c[i][n].
  DemandDualBounds out{Eigen::MatrixXd::Zero(inst.aps(), inst.horizon)};
  for (int i = 0; i < inst.aps(); ++i) {
    double worst = inst.cloud_unit_cost(i);
    for (int j = 0; j < inst.ens(); ++j) worst = std::max(worst, inst.edge_unit_cost(i, j));
    out.upper.row(i).setConstant(inst.horizon * worst);
  }
  return out;
}

CutPoint make_saro_cut(const Instance& inst, const SaroFirstStage& first,
                       const Eigen::MatrixXd& offset) {
  const BuiltModel lp = build_saro_recourse(inst, first, offset, false);
  CutPoint cut;
  cut.dual = dualize(lp.model);
  cut.cover_dual = cover_duals(inst, lp.map, cut.dual);
  return cut;
}

SaroFirstStage extract_saro_first_stage(const Instance& inst, const VarMap& map,
                                        const SolveResult& res) {
  SaroFirstStage f;
  f.placement.resize(inst.ens());
  f.edge.resize(inst.ens());
  for (int j = 0; j < inst.ens(); ++j) {
    f.placement(j) = std::round(res.values.at(map.var({"zs", -1, j})));
    f.edge(j) = std::clamp(res.values.at(map.var({"ss", -1, j})), 0.0, inst.costs.capacity(j));
  }
  f.cloud = std::max(0.0, res.values.at(map.var({"ss0"})));
  return f;
}

double saro_first_stage_cost(const Instance& inst, const SaroFirstStage& first) {
  const auto& c = inst.costs;
  double cost = c.slot_length * c.reserve_price_cloud.sum() * first.cloud;
  for (int j = 0; j < inst.ens(); ++j)
    cost += first.placement(j) * saro_placement_cost(inst, j) +
            c.slot_length * c.reserve_price_edge.row(j).sum() * first.edge(j);
  return cost;
}

FirstStage saro_as_first_stage(const Instance& inst, const SaroFirstStage& first) {
  FirstStage fs = FirstStage::zeros(inst.ens(), inst.horizon);
  for (int j = 0; j < inst.ens(); ++j) fs.edge.row(j).setConstant(first.edge(j));
  fs.cloud.setConstant(first.cloud);
  return fs;
}

}  // namespace edgeplan
