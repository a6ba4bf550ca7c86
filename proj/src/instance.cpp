#include "edgeplan/instance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "edgeplan/json_io.hpp"

namespace edgeplan {

using jsonio::json;

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "instance validation failed:";
  for (const auto& s : v) out += "\n  " + s;
  return out;
}

std::string at(int a, int b) {
  return "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
}

bool shape(const Eigen::MatrixXd& m, int r, int c) { return m.rows() == r && m.cols() == c; }

void need_shape(std::vector<std::string>& out, const Eigen::MatrixXd& m, int r, int c,
                const std::string& what) {
  if (!shape(m, r, c))
    out.push_back(what + ": expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " +
                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void need_size(std::vector<std::string>& out, const Eigen::VectorXd& v, int n,
               const std::string& what) {
  if (v.size() != n)
    out.push_back(what + ": expected length " + std::to_string(n) + ", got " +
                  std::to_string(v.size()));
}

void need_nonneg(std::vector<std::string>& out, const Eigen::MatrixXd& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (!(m(r, c) >= 0.0) || !std::isfinite(m(r, c))) {
        out.push_back(what + at(r, c) + " must be finite and nonnegative");
        return;
      }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

double Instance::edge_unit_cost(int i, int j) const {
  return costs.delay_penalty * topology.delay_edge(i, j) +
         costs.bandwidth_unit * costs.request_size * topology.hops_edge(i, j);
}

double Instance::cloud_unit_cost(int i) const {
  return costs.delay_penalty * topology.delay_cloud(i) +
         costs.bandwidth_unit * costs.request_size * topology.hops_cloud(i);
}

std::vector<std::string> check_instance(const Instance& inst) {
  std::vector<std::string> out;
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  if (I < 1) out.push_back("topology.ap_count must be >= 1");
  if (J < 1) out.push_back("topology.en_count must be >= 1");
  if (T < 1) out.push_back("horizon must be >= 1");
  if (!out.empty()) return out;

  const auto& tp = inst.topology;
  need_shape(out, tp.delay_edge, I, J, "topology.delay_edge");
  need_size(out, tp.delay_cloud, I, "topology.delay_cloud");
  need_shape(out, tp.hops_edge, I, J, "topology.hops_edge");
  need_size(out, tp.hops_cloud, I, "topology.hops_cloud");
  const auto& c = inst.costs;
  need_shape(out, c.reserve_price_edge, J, T, "costs.reserve_price_edge");
  need_shape(out, c.buy_price_edge, J, T, "costs.buy_price_edge");
  need_shape(out, c.sell_price_edge, J, T, "costs.sell_price_edge");
  need_size(out, c.reserve_price_cloud, T, "costs.reserve_price_cloud");
  need_size(out, c.buy_price_cloud, T, "costs.buy_price_cloud");
  need_size(out, c.sell_price_cloud, T, "costs.sell_price_cloud");
  need_shape(out, c.install_cost, J, T, "costs.install_cost");
  need_shape(out, c.storage_cost, J, T, "costs.storage_cost");
  need_shape(out, c.download_cloud, J, T, "costs.download_cloud");
  if (static_cast<int>(c.download_en.size()) != J) {
    out.push_back("costs.download_en: expected " + std::to_string(J) + " source nodes");
  } else {
    for (int m = 0; m < J; ++m)
      need_shape(out, c.download_en[m], J, T, "costs.download_en[" + std::to_string(m) + "]");
  }
  need_size(out, c.capacity, J, "costs.capacity");
  if (static_cast<int>(c.initial_placement.size()) != J)
    out.push_back("costs.initial_placement: expected length " + std::to_string(J));
  need_shape(out, inst.forecast, I, T, "forecast");
  if (!out.empty()) return out;

  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) {
      if (!(tp.delay_edge(i, j) > 0)) out.push_back("topology.delay_edge" + at(i, j) + " must be > 0");
      if (!(tp.hops_edge(i, j) >= 1)) out.push_back("topology.hops_edge" + at(i, j) + " must be >= 1");
    }
    if (!(tp.delay_cloud(i) > 0))
      out.push_back("topology.delay_cloud[" + std::to_string(i) + "] must be > 0");
    if (!(tp.hops_cloud(i) >= 1))
      out.push_back("topology.hops_cloud[" + std::to_string(i) + "] must be >= 1");
  }

  need_nonneg(out, c.reserve_price_edge, "costs.reserve_price_edge");
  need_nonneg(out, c.buy_price_edge, "costs.buy_price_edge");
  need_nonneg(out, c.sell_price_edge, "costs.sell_price_edge");
  need_nonneg(out, c.reserve_price_cloud, "costs.reserve_price_cloud");
  need_nonneg(out, c.buy_price_cloud, "costs.buy_price_cloud");
  need_nonneg(out, c.sell_price_cloud, "costs.sell_price_cloud");
  need_nonneg(out, c.install_cost, "costs.install_cost");
  need_nonneg(out, c.storage_cost, "costs.storage_cost");
  need_nonneg(out, c.download_cloud, "costs.download_cloud");
  for (int m = 0; m < J; ++m)
    need_nonneg(out, c.download_en[m], "costs.download_en[" + std::to_string(m) + "]");
  need_nonneg(out, inst.forecast, "forecast");

  for (int j = 0; j < J; ++j)
    for (int t = 0; t < T; ++t) {
      const double a = c.sell_price_edge(j, t), p = c.reserve_price_edge(j, t),
                   e = c.buy_price_edge(j, t);
      if (!(a <= p && p <= e))
        out.push_back("price ordering sell <= reserve <= buy violated at edge" + at(j, t));
    }
  for (int t = 0; t < T; ++t) {
    const double a = c.sell_price_cloud(t), p = c.reserve_price_cloud(t), e = c.buy_price_cloud(t);
    if (!(a <= p && p <= e))
      out.push_back("price ordering sell <= reserve <= buy violated at cloud[" +
                    std::to_string(t) + "]");
  }
  if (!(c.slot_length >= 0)) out.push_back("costs.slot_length must be nonnegative");
  if (!(c.bandwidth_unit >= 0)) out.push_back("costs.bandwidth_unit must be nonnegative");
  if (!(c.request_size >= 0)) out.push_back("costs.request_size must be nonnegative");
  if (!(c.resource_per_request >= 0)) out.push_back("costs.resource_per_request must be nonnegative");
  if (!(c.delay_penalty >= 0)) out.push_back("costs.delay_penalty must be nonnegative");
  for (int j = 0; j < J; ++j) {
    if (!(c.capacity(j) > 0)) out.push_back("costs.capacity[" + std::to_string(j) + "] must be > 0");
    if (c.initial_placement[j] != 0 && c.initial_placement[j] != 1)
      out.push_back("costs.initial_placement[" + std::to_string(j) + "] must be 0 or 1");
  }
  for (auto& s : check_uncertainty(inst.uncertainty, I, T)) out.push_back("uncertainty: " + s);
  return out;
}

void validate_instance(const Instance& inst) {
  auto v = check_instance(inst);
  if (!v.empty()) throw ValidationError(std::move(v));
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using jsonio::from_matrix;
using jsonio::from_vector;
using jsonio::require;
using jsonio::to_matrix;
using jsonio::to_vector;

json uncertainty_to_json(const UncertaintySpec& u) {
  json j;
  if (u.is_dynamic()) {
    const auto& d = u.dus();
    j["type"] = "dus";
    j["budget"] = d.budget;
    j["lag"] = d.lag;
    j["ar"] = from_matrix(d.ar);
    j["mixing"] = from_matrix(d.mixing);
    j["seed_residuals"] = from_matrix(d.seed_residuals);
  } else {
    const auto& s = u.sus();
    j["type"] = "sus";
    j["budget"] = s.budget;
    j["deviation"] = from_matrix(s.deviation);
  }
  j["clip"] = u.clip;
  return j;
}

UncertaintySpec uncertainty_from_json(const json& j, int I, int T) {
  UncertaintySpec u;
  const std::string type = require(j, "type").get<std::string>();
  const int budget = require(j, "budget").get<int>();
  if (type == "sus") {
    SusSpec s;
    s.budget = budget;
    s.deviation = to_matrix(require(j, "deviation"), I, T, "uncertainty.deviation");
    u.set = std::move(s);
  } else if (type == "dus") {
    DusSpec d;
    d.budget = budget;
    d.lag = require(j, "lag").get<int>();
    if (d.lag < 1) throw ParseError("uncertainty.lag must be >= 1");
    d.ar = to_matrix(require(j, "ar"), I, d.lag, "uncertainty.ar");
    d.mixing = to_matrix(require(j, "mixing"), I, I, "uncertainty.mixing");
    if (j.contains("seed_residuals"))
      d.seed_residuals = to_matrix(j.at("seed_residuals"), I, d.lag, "uncertainty.seed_residuals");
    else
      d.seed_residuals = Eigen::MatrixXd::Zero(I, d.lag);
    u.set = std::move(d);
  } else {
    throw ParseError("uncertainty.type must be 'sus' or 'dus'");
  }
  u.clip = j.value("clip", false);
  return u;
}

}  // namespace

Instance parse_instance(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed instance JSON: ") + e.what());
  }
  Instance inst;
  try {
    const json& tp = require(doc, "topology");
    const int I = require(tp, "ap_count").get<int>();
    const int J = require(tp, "en_count").get<int>();
    const int T = require(doc, "horizon").get<int>();
    if (I < 1 || J < 1 || T < 1) throw ParseError("ap_count, en_count and horizon must be >= 1");
    inst.horizon = T;
    inst.topology.ap_count = I;
    inst.topology.en_count = J;
    inst.topology.delay_edge = to_matrix(require(tp, "delay_edge"), I, J, "topology.delay_edge");
    inst.topology.delay_cloud = to_vector(require(tp, "delay_cloud"), I, "topology.delay_cloud");
    inst.topology.hops_edge = to_matrix(require(tp, "hops_edge"), I, J, "topology.hops_edge");
    inst.topology.hops_cloud = to_vector(require(tp, "hops_cloud"), I, "topology.hops_cloud");

    const json& cj = require(doc, "costs");
    auto& c = inst.costs;
    c.slot_length = cj.value("slot_length", 1.0 / 3.0);
    c.reserve_price_edge = to_matrix(require(cj, "reserve_price_edge"), J, T, "reserve_price_edge");
    c.reserve_price_cloud = to_vector(require(cj, "reserve_price_cloud"), T, "reserve_price_cloud");
    c.buy_price_edge = to_matrix(require(cj, "buy_price_edge"), J, T, "buy_price_edge");
    c.buy_price_cloud = to_vector(require(cj, "buy_price_cloud"), T, "buy_price_cloud");
    c.sell_price_edge = to_matrix(require(cj, "sell_price_edge"), J, T, "sell_price_edge");
    c.sell_price_cloud = to_vector(require(cj, "sell_price_cloud"), T, "sell_price_cloud");
    c.install_cost = to_matrix(require(cj, "install_cost"), J, T, "install_cost");
    c.storage_cost = to_matrix(require(cj, "storage_cost"), J, T, "storage_cost");
    const json& dl = require(cj, "download_en");
    if (!dl.is_array() || static_cast<int>(dl.size()) != J)
      throw ParseError("download_en: expected " + std::to_string(J) + " source nodes");
    for (int m = 0; m < J; ++m)
      c.download_en.push_back(to_matrix(dl[m], J, T, "download_en[" + std::to_string(m) + "]"));
    c.download_cloud = to_matrix(require(cj, "download_cloud"), J, T, "download_cloud");
    c.bandwidth_unit = require(cj, "bandwidth_unit").get<double>();
    c.request_size = require(cj, "request_size").get<double>();
    c.resource_per_request = require(cj, "resource_per_request").get<double>();
    c.delay_penalty = require(cj, "delay_penalty").get<double>();
    c.capacity = to_vector(require(cj, "capacity"), J, "capacity");
    const json& z0 = require(cj, "initial_placement");
    if (!z0.is_array() || static_cast<int>(z0.size()) != J)
      throw ParseError("initial_placement: expected " + std::to_string(J) + " entries");
    for (const auto& v : z0) c.initial_placement.push_back(v.get<int>());

    inst.forecast = to_matrix(require(doc, "forecast"), I, T, "forecast");
    inst.uncertainty = uncertainty_from_json(require(doc, "uncertainty"), I, T);
  } catch (const json::exception& e) {
    throw ParseError(std::string("instance JSON has an unexpected type: ") + e.what());
  }
  validate_instance(inst);
  return inst;
}

std::string serialize_instance(const Instance& inst) {
  json doc;
  const auto& tp = inst.topology;
  doc["topology"] = {{"ap_count", tp.ap_count},
                     {"en_count", tp.en_count},
                     {"delay_edge", from_matrix(tp.delay_edge)},
                     {"delay_cloud", from_vector(tp.delay_cloud)},
                     {"hops_edge", from_matrix(tp.hops_edge)},
                     {"hops_cloud", from_vector(tp.hops_cloud)}};
  const auto& c = inst.costs;
  json dl = json::array();
  for (const auto& m : c.download_en) dl.push_back(from_matrix(m));
  doc["costs"] = {{"slot_length", c.slot_length},
                  {"reserve_price_edge", from_matrix(c.reserve_price_edge)},
                  {"reserve_price_cloud", from_vector(c.reserve_price_cloud)},
                  {"buy_price_edge", from_matrix(c.buy_price_edge)},
                  {"buy_price_cloud", from_vector(c.buy_price_cloud)},
                  {"sell_price_edge", from_matrix(c.sell_price_edge)},
                  {"sell_price_cloud", from_vector(c.sell_price_cloud)},
                  {"install_cost", from_matrix(c.install_cost)},
                  {"storage_cost", from_matrix(c.storage_cost)},
                  {"download_en", dl},
                  {"download_cloud", from_matrix(c.download_cloud)},
                  {"bandwidth_unit", c.bandwidth_unit},
                  {"request_size", c.request_size},
                  {"resource_per_request", c.resource_per_request},
                  {"delay_penalty", c.delay_penalty},
                  {"capacity", from_vector(c.capacity)},
                  {"initial_placement", c.initial_placement}};
  doc["horizon"] = inst.horizon;
  doc["forecast"] = from_matrix(inst.forecast);
  doc["uncertainty"] = uncertainty_to_json(inst.uncertainty);
  return doc.dump(2) + "\n";
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open instance file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_instance(inst);
}

// ---------------------------------------------------------------------------
// Plans and costs

FirstStage FirstStage::zeros(int en_count, int periods) {
  return {Eigen::MatrixXd::Zero(en_count, periods), Eigen::VectorXd::Zero(periods)};
}

RecoursePlan RecoursePlan::zeros(int ap_count, int en_count, int periods) {
  RecoursePlan rp;
  const Eigen::MatrixXd jt = Eigen::MatrixXd::Zero(en_count, periods);
  rp.placement = jt;
  rp.startup = jt;
  rp.download_en.assign(en_count, jt);
  rp.download_cloud = jt;
  rp.alloc_edge.assign(ap_count, jt);
  rp.alloc_cloud = Eigen::MatrixXd::Zero(ap_count, periods);
  rp.buy_edge = jt;
  rp.buy_cloud = Eigen::VectorXd::Zero(periods);
  rp.sell_edge = jt;
  rp.sell_cloud = Eigen::VectorXd::Zero(periods);
  return rp;
}

namespace {

void check_dims(const Instance& inst, const FirstStage& fs, const RecoursePlan& rp) {
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  auto jt = [&](const Eigen::MatrixXd& m) { return shape(m, J, T); };
  bool ok = jt(fs.edge) && fs.cloud.size() == T && jt(rp.placement) && jt(rp.startup) &&
            jt(rp.download_cloud) && jt(rp.buy_edge) && jt(rp.sell_edge) &&
            rp.buy_cloud.size() == T && rp.sell_cloud.size() == T &&
            shape(rp.alloc_cloud, I, T) && static_cast<int>(rp.alloc_edge.size()) == I &&
            static_cast<int>(rp.download_en.size()) == J;
  if (ok) {
    for (const auto& m : rp.alloc_edge) ok = ok && jt(m);
    for (const auto& m : rp.download_en) ok = ok && jt(m);
  }
  if (!ok) throw DimensionError("plan dimensions do not match the instance");
}

double prev_placement(const Instance& inst, const RecoursePlan& rp, int j, int t) {
  return t == 0 ? inst.costs.initial_placement[j] : rp.placement(j, t - 1);
}

}  // namespace

CostBreakdown cost_breakdown(const Instance& inst, const FirstStage& fs, const RecoursePlan& rp) {
  check_dims(inst, fs, rp);
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  const auto& c = inst.costs;
  const double d = c.slot_length;
  CostBreakdown b;
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      b.reserve += d * c.reserve_price_edge(j, t) * fs.edge(j, t);
      b.adjust += d * (c.buy_price_edge(j, t) * rp.buy_edge(j, t) -
                       c.sell_price_edge(j, t) * rp.sell_edge(j, t));
      b.install += c.install_cost(j, t) * rp.startup(j, t);
      b.storage += c.storage_cost(j, t) * rp.placement(j, t);
      b.download += c.download_cloud(j, t) * rp.download_cloud(j, t);
      for (int m = 0; m < J; ++m)
        if (m != j) b.download += c.download_en[m](j, t) * rp.download_en[m](j, t);
    }
    b.reserve += d * c.reserve_price_cloud(t) * fs.cloud(t);
    b.adjust += d * (c.buy_price_cloud(t) * rp.buy_cloud(t) - c.sell_price_cloud(t) * rp.sell_cloud(t));
    const double bw = c.bandwidth_unit * c.request_size;
    for (int i = 0; i < I; ++i) {
      b.delay += c.delay_penalty * inst.topology.delay_cloud(i) * rp.alloc_cloud(i, t);
      b.bandwidth += bw * inst.topology.hops_cloud(i) * rp.alloc_cloud(i, t);
      for (int j = 0; j < J; ++j) {
        b.delay += c.delay_penalty * inst.topology.delay_edge(i, j) * rp.alloc_edge[i](j, t);
        b.bandwidth += bw * inst.topology.hops_edge(i, j) * rp.alloc_edge[i](j, t);
      }
    }
  }
  b.total = b.reserve + b.adjust + b.install + b.download + b.storage + b.delay + b.bandwidth;
  return b;
}

std::vector<std::string> validate_recourse(const Instance& inst, const FirstStage& fs,
                                           const RecoursePlan& rp, const Eigen::MatrixXd& demand) {
  check_dims(inst, fs, rp);
  const int I = inst.aps(), J = inst.ens(), T = inst.horizon;
  if (!shape(demand, I, T)) throw DimensionError("demand must be I x T");
  const auto& c = inst.costs;
  const double tol = kFeasTol;
  const double w = c.resource_per_request;
  std::vector<std::string> out;
  auto binary = [&](double v) { return std::abs(v) <= tol || std::abs(v - 1.0) <= tol; };

  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      const std::string jt = at(j, t);
      const double s = fs.edge(j, t), z = rp.placement(j, t), zp = prev_placement(inst, rp, j, t);
      const double yb = rp.buy_edge(j, t), ys = rp.sell_edge(j, t);
      if (s < -tol || s > c.capacity(j) + tol) out.push_back("reservation_bounds edge" + jt);
      if (!binary(z)) out.push_back("binary placement" + jt);
      if (!binary(rp.startup(j, t))) out.push_back("binary startup" + jt);
      if (!binary(rp.download_cloud(j, t))) out.push_back("binary download_cloud" + jt);
      if (yb < -tol || ys < -tol) out.push_back("nonnegative adjustment edge" + jt);
      if (s + yb - ys > c.capacity(j) * z + tol)
        out.push_back("capacity_coupling s+yB-yS <= C*z at edge" + jt);
      if (ys > s + tol) out.push_back("sell_back yS <= s at edge" + jt);
      double alloc = 0.0;
      for (int i = 0; i < I; ++i) alloc += rp.alloc_edge[i](j, t);
      if (s + yb - ys < w * alloc - tol)
        out.push_back("edge_balance s+yB-yS >= w*sum_i x at edge" + jt);
      if (rp.startup(j, t) < z - zp - tol) out.push_back("startup u >= z[t]-z[t-1] at edge" + jt);
      double incoming = rp.download_cloud(j, t);
      for (int m = 0; m < J; ++m) {
        const double q = rp.download_en[m](j, t);
        if (!binary(q)) out.push_back("binary download_en[" + std::to_string(m) + "]" + jt);
        if (m == j && q > tol) out.push_back("self_download q[j][j] = 0 at edge" + jt);
        if (m != j) incoming += q;
      }
      if (incoming < z - zp - tol)
        out.push_back("download_required on new placement at edge" + jt);
      double outgoing = 0.0;
      for (int k = 0; k < J; ++k)
        if (k != j) outgoing += rp.download_en[j](k, t);
      if (outgoing > zp + tol)
        out.push_back("download_source needs placement at t-1 on edge" + jt);
    }
    const double s0 = fs.cloud(t), yb0 = rp.buy_cloud(t), ys0 = rp.sell_cloud(t);
    const std::string ts = "[" + std::to_string(t) + "]";
    if (s0 < -tol) out.push_back("reservation_bounds cloud" + ts);
    if (yb0 < -tol || ys0 < -tol) out.push_back("nonnegative adjustment cloud" + ts);
    if (ys0 > s0 + tol) out.push_back("sell_back yS0 <= s0 at cloud" + ts);
    double cloud_alloc = 0.0;
    for (int i = 0; i < I; ++i) {
      cloud_alloc += rp.alloc_cloud(i, t);
      double served = rp.alloc_cloud(i, t);
      if (rp.alloc_cloud(i, t) < -tol) out.push_back("nonnegative allocation cloud" + at(i, t));
      for (int j = 0; j < J; ++j) {
        served += rp.alloc_edge[i](j, t);
        if (rp.alloc_edge[i](j, t) < -tol)
          out.push_back("nonnegative allocation edge[" + std::to_string(i) + "]" + at(j, t));
      }
      if (served < demand(i, t) - tol) out.push_back("demand_coverage at area" + at(i, t));
    }
    if (s0 + yb0 - ys0 < w * cloud_alloc - tol)
      out.push_back("cloud_balance s0+yB0-yS0 >= w*sum_i x0" + ts);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Traces

DemandTraces parse_traces_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      cells.push_back(cell);
    }
    return cells;
  };
  if (!std::getline(in, line)) throw ParseError("trace CSV is empty");
  const auto header = split(line);
  if (header.size() < 2 || header[0] != "period")
    throw ParseError("trace CSV header must be period,area_1,...,area_I");
  const int I = static_cast<int>(header.size()) - 1;
  for (int i = 0; i < I; ++i)
    if (header[i + 1] != "area_" + std::to_string(i + 1))
      throw ParseError("trace CSV header column " + std::to_string(i + 2) + " should be area_" +
                       std::to_string(i + 1));
  DemandTraces tr;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (static_cast<int>(cells.size()) != I + 1)
      throw ParseError("trace CSV line " + std::to_string(lineno) + " has the wrong column count");
    try {
      tr.periods.push_back(std::stol(cells[0]));
      std::vector<double> row(I);
      for (int i = 0; i < I; ++i) {
        std::size_t pos = 0;
        row[i] = std::stod(cells[i + 1], &pos);
        if (pos != cells[i + 1].size()) throw std::invalid_argument("trailing characters");
      }
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw ParseError("trace CSV line " + std::to_string(lineno) + " is not numeric");
    }
  }
  tr.values.resize(static_cast<Eigen::Index>(rows.size()), I);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int i = 0; i < I; ++i) tr.values(static_cast<Eigen::Index>(r), i) = rows[r][i];
  return tr;
}

DemandTraces read_traces_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_traces_csv(ss.str());
}

std::string format_traces_csv(const DemandTraces& traces) {
  std::ostringstream os;
  os << "period";
  for (Eigen::Index i = 0; i < traces.values.cols(); ++i) os << ",area_" << i + 1;
  os << '\n';
  char buf[40];
  for (Eigen::Index r = 0; r < traces.values.rows(); ++r) {
    os << traces.periods.at(static_cast<std::size_t>(r));
    for (Eigen::Index i = 0; i < traces.values.cols(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", traces.values(r, i));
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace edgeplan
