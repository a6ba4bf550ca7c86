#include "edgeplan/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/dijkstra_shortest_paths.hpp>

namespace edgeplan {

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Distinct seeds per stream so that changing one dimension does not shift the
// draws of unrelated streams.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(static_cast<std::size_t>(nodes), 0);
  for (const auto& l : links) {
    ++deg[static_cast<std::size_t>(l.u)];
    ++deg[static_cast<std::size_t>(l.v)];
  }
  return deg;
}

Graph barabasi_albert(int nodes, int attach, double delay_lo, double delay_hi, std::uint64_t seed) {
  if (attach < 1) throw std::invalid_argument("attach must be at least 1");
  if (nodes < attach + 1)
    throw std::invalid_argument("need at least attach + 1 nodes, got " + std::to_string(nodes));
  if (!(delay_lo > 0.0) || delay_hi < delay_lo)
    throw std::invalid_argument("delay range must satisfy 0 < lo <= hi");
  Rng rng(seed);
  Graph g;
  g.nodes = nodes;
  // Each node appears in `ends` once per incident link, so a uniform pick from
  // it is a degree-proportional pick.
  std::vector<int> ends;
  auto add = [&](int u, int v) {
    g.links.push_back({u, v, uniform(rng, delay_lo, delay_hi)});
    ends.push_back(u);
    ends.push_back(v);
  };
  for (int u = 0; u <= attach; ++u)
    for (int v = u + 1; v <= attach; ++v) add(u, v);
  for (int n = attach + 1; n < nodes; ++n) {
    std::vector<int> targets;
    while (static_cast<int>(targets.size()) < attach) {
      std::uniform_int_distribution<std::size_t> pick(0, ends.size() - 1);
      const int t = ends[pick(rng)];
      if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
    }
    for (int t : targets) add(n, t);
  }
  return g;
}

ShortestPaths shortest_paths(const Graph& g, int source) {
  if (source < 0 || source >= g.nodes) throw std::out_of_range("source node out of range");
  using BGraph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS, boost::no_property,
                                       boost::property<boost::edge_weight_t, double>>;
  BGraph bg(static_cast<std::size_t>(g.nodes));
  for (const auto& l : g.links) {
    if (l.delay < 0.0) throw std::invalid_argument("negative link delay");
    boost::add_edge(static_cast<std::size_t>(l.u), static_cast<std::size_t>(l.v), l.delay, bg);
  }
  const auto n = static_cast<std::size_t>(g.nodes);
  std::vector<double> dist(n);
  std::vector<std::size_t> pred(n);
  boost::dijkstra_shortest_paths(
      bg, static_cast<std::size_t>(source),
      boost::predecessor_map(boost::make_iterator_property_map(pred.begin(), boost::get(boost::vertex_index, bg)))
          .distance_map(boost::make_iterator_property_map(dist.begin(), boost::get(boost::vertex_index, bg))));
  ShortestPaths out;
  out.delay.assign(n, std::numeric_limits<double>::infinity());
  out.hops.assign(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    if (dist[v] == std::numeric_limits<double>::max()) continue;
    out.delay[v] = dist[v];
    int hops = 0;
    std::size_t cur = v;
    while (cur != static_cast<std::size_t>(source)) {
      cur = pred[cur];
      ++hops;
    }
    out.hops[v] = hops;
  }
  return out;
}

Designation designate_nodes(const Graph& g, int aps, int ens) {
  if (aps < 1 || ens < 1) throw std::invalid_argument("need at least one AP and one EN");
  if (g.nodes < aps + ens + 1)
    throw std::invalid_argument("graph has " + std::to_string(g.nodes) + " nodes; need " +
                                std::to_string(aps + ens + 1) + " for APs, ENs and cloud");
  const auto deg = g.degrees();
  std::vector<int> order(static_cast<std::size_t>(g.nodes));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return deg[static_cast<std::size_t>(a)] > deg[static_cast<std::size_t>(b)];
  });
  Designation d;
  // The hub stays a pure router when there is room for it.
  const int skip = g.nodes >= aps + ens + 2 ? 1 : 0;
  if (skip) d.hub = order[0];
  d.aps.assign(order.begin() + skip, order.begin() + skip + aps);
  d.ens.assign(order.begin() + skip + aps, order.begin() + skip + aps + ens);
  // Lowest degree among the rest; the stable sort keeps ties in index order,
  // so scan for the first node with the minimum degree.
  const int min_deg = deg[static_cast<std::size_t>(order.back())];
  for (std::size_t k = static_cast<std::size_t>(skip + aps + ens); k < order.size(); ++k) {
    if (deg[static_cast<std::size_t>(order[k])] == min_deg) {
      d.cloud = order[k];
      break;
    }
  }
  return d;
}

Topology gen_topology(const TopologyOptions& opts) {
  if (opts.nodes < opts.aps + opts.ens + 1)
    throw std::invalid_argument("nodes must be at least I + J + 1");
  if (opts.cloud_delay < 0.0) throw std::invalid_argument("cloud_delay must be nonnegative");
  Graph g = barabasi_albert(opts.nodes, opts.attach, opts.delay_lo, opts.delay_hi, opts.seed);
  const Designation d = designate_nodes(g, opts.aps, opts.ens);
  for (auto& l : g.links)
    if (l.u == d.cloud || l.v == d.cloud) l.delay += opts.cloud_delay;

  Topology topo;
  topo.ap_count = opts.aps;
  topo.en_count = opts.ens;
  topo.delay_edge.resize(opts.aps, opts.ens);
  topo.hops_edge.resize(opts.aps, opts.ens);
  topo.delay_cloud.resize(opts.aps);
  topo.hops_cloud.resize(opts.aps);
  for (int i = 0; i < opts.aps; ++i) {
    const ShortestPaths sp = shortest_paths(g, d.aps[static_cast<std::size_t>(i)]);
    for (int j = 0; j < opts.ens; ++j) {
      const auto v = static_cast<std::size_t>(d.ens[static_cast<std::size_t>(j)]);
      topo.delay_edge(i, j) = sp.delay[v];
      topo.hops_edge(i, j) = sp.hops[v];
    }
    topo.delay_cloud(i) = sp.delay[static_cast<std::size_t>(d.cloud)];
    topo.hops_cloud(i) = sp.hops[static_cast<std::size_t>(d.cloud)];
  }
  return topo;
}

CostSchedule gen_costs(int aps, int ens, int periods, std::uint64_t seed) {
  if (aps < 1 || ens < 1 || periods < 1) throw std::invalid_argument("dimensions must be positive");
  Rng rng(seed);
  CostSchedule c;
  c.slot_length = 1.0 / 3.0;
  c.reserve_price_edge.resize(ens, periods);
  c.buy_price_edge.resize(ens, periods);
  c.sell_price_edge.resize(ens, periods);
  for (int j = 0; j < ens; ++j) {
    for (int t = 0; t < periods; ++t) {
      double a, p, e;
      do {
        a = uniform(rng, 0.01, 0.03);
        p = uniform(rng, 0.08, 0.15);
        e = uniform(rng, 0.10, 0.15);
      } while (!(a <= p && p <= e));
      c.sell_price_edge(j, t) = a;
      c.reserve_price_edge(j, t) = p;
      c.buy_price_edge(j, t) = e;
    }
  }
  c.reserve_price_cloud = Eigen::VectorXd::Constant(periods, 0.06);
  c.buy_price_cloud.resize(periods);
  c.sell_price_cloud.resize(periods);
  for (int t = 0; t < periods; ++t) {
    // The surcharge range is taken as a markup on the cloud reserved price so
    // that buying on demand is never cheaper than reserving.
    c.buy_price_cloud(t) = c.reserve_price_cloud(t) + uniform(rng, 0.03, 0.05);
    c.sell_price_cloud(t) = uniform(rng, 0.01, 0.02);
  }
  c.install_cost.resize(ens, periods);
  c.storage_cost.resize(ens, periods);
  c.download_cloud.resize(ens, periods);
  for (int j = 0; j < ens; ++j)
    for (int t = 0; t < periods; ++t) {
      c.install_cost(j, t) = uniform(rng, 0.10, 0.15);
      c.storage_cost(j, t) = uniform(rng, 0.10, 0.15);
      c.download_cloud(j, t) = uniform(rng, 0.10, 0.30);
    }
  c.download_en.assign(static_cast<std::size_t>(ens), Eigen::MatrixXd::Zero(ens, periods));
  for (int m = 0; m < ens; ++m)
    for (int j = 0; j < ens; ++j)
      for (int t = 0; t < periods; ++t)
        if (m != j) c.download_en[static_cast<std::size_t>(m)](j, t) = uniform(rng, 0.05, 0.08);
  c.capacity.resize(ens);
  const double caps[] = {32.0, 48.0, 64.0};
  std::uniform_int_distribution<int> pick(0, 2);
  for (int j = 0; j < ens; ++j) c.capacity(j) = caps[pick(rng)];
  c.bandwidth_unit = 0.02;
  c.request_size = 0.02;
  c.resource_per_request = 0.02;
  c.delay_penalty = 0.0001;
  c.initial_placement.assign(static_cast<std::size_t>(ens), 0);
  return c;
}

DemandTraces gen_demand_traces(int aps, int periods, const Eigen::MatrixXd& phi, const ARFit& process,
                               std::uint64_t seed, long first_period, const SeasonalPeriods& seasonal) {
  if (aps < 1 || periods < 1) throw std::invalid_argument("dimensions must be positive");
  if (phi.rows() != aps || phi.cols() != kSeasonalTerms)
    throw DimensionError("phi must be I x " + std::to_string(kSeasonalTerms));
  const int lag = process.lag;
  if (lag < 1 || process.ar.rows() != aps || process.ar.cols() != lag)
    throw DimensionError("AR coefficients must be I x L with L >= 1");
  if (process.mixing.rows() != aps || process.mixing.cols() != aps)
    throw DimensionError("mixing matrix must be I x I");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Burn in from zero residuals so the emitted segment starts near stationarity.
  const int burn_in = 20 * lag + 50;
  std::vector<Eigen::VectorXd> hist(static_cast<std::size_t>(lag), Eigen::VectorXd::Zero(aps));
  DemandTraces out;
  out.values.resize(periods, aps);
  out.periods.resize(static_cast<std::size_t>(periods));
  Eigen::VectorXd g(aps);
  for (int k = -burn_in; k < periods; ++k) {
    for (int i = 0; i < aps; ++i) g(i) = normal(rng);
    Eigen::VectorXd r = process.mixing * g;
    for (int s = 1; s <= lag; ++s)
      r += process.ar.col(s - 1).cwiseProduct(hist[hist.size() - static_cast<std::size_t>(s)]);
    hist.erase(hist.begin());
    hist.push_back(r);
    if (k < 0) continue;
    const long tindex = first_period + k;
    const Eigen::VectorXd mean = phi * seasonal_basis(static_cast<double>(tindex), seasonal).transpose();
    out.values.row(k) = (mean + r).cwiseMax(0.0).transpose();
    out.periods[static_cast<std::size_t>(k)] = tindex;
  }
  return out;
}

SusSpec sus_from_alpha(const Eigen::MatrixXd& forecast, double alpha, int budget) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be nonnegative");
  SusSpec s;
  s.deviation = alpha * forecast.cwiseAbs();
  s.budget = budget;
  return s;
}

GeneratedInstance generate_instance(const InstanceOptions& opts) {
  const int aps = opts.topology.aps;
  const int ens = opts.topology.ens;
  if (opts.horizon < 1) throw std::invalid_argument("horizon must be positive");
  if (opts.budget < 0 || opts.budget > aps) throw BudgetError("budget must lie in [0, I]");
  if (opts.lag < 1) throw std::invalid_argument("lag must be at least 1");
  const SeasonalPeriods seasonal;
  const int min_history = std::max(10 * opts.lag * aps, static_cast<int>(2 * seasonal.primary));
  if (opts.history < min_history)
    throw std::invalid_argument("history must cover at least " + std::to_string(min_history) + " periods");

  TopologyOptions topo_opts = opts.topology;
  topo_opts.seed = stream_seed(opts.seed, 1);

  GeneratedInstance out;
  Instance& inst = out.instance;
  inst.topology = gen_topology(topo_opts);
  inst.costs = gen_costs(aps, ens, opts.horizon, stream_seed(opts.seed, 2));
  inst.horizon = opts.horizon;

  // Ground-truth demand model: a daily cycle around a per-area base level and a
  // stable AR process with mildly correlated innovations.
  Rng rng(stream_seed(opts.seed, 3));
  out.true_phi.resize(aps, kSeasonalTerms);
  for (int i = 0; i < aps; ++i) {
    const double base = uniform(rng, 100.0, 400.0);
    out.true_phi(i, 0) = base;
    out.true_phi(i, 1) = base * uniform(rng, -0.3, 0.3);
    out.true_phi(i, 2) = base * uniform(rng, -0.3, 0.3);
    out.true_phi(i, 3) = base * uniform(rng, -0.1, 0.1);
    out.true_phi(i, 4) = base * uniform(rng, -0.1, 0.1);
  }
  ARFit& truth = out.true_process;
  truth.phi = out.true_phi;
  truth.lag = opts.lag;
  truth.ar.resize(aps, opts.lag);
  for (int i = 0; i < aps; ++i) {
    // Coefficients sum below one in absolute value, which keeps each area stable.
    const double total = uniform(rng, 0.3, 0.7);
    for (int s = 0; s < opts.lag; ++s) truth.ar(i, s) = total / opts.lag;
  }
  Eigen::VectorXd scale(aps);
  for (int i = 0; i < aps; ++i) scale(i) = 0.05 * out.true_phi(i, 0);
  const double rho = 0.3;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(aps, aps, rho);
  corr.diagonal().setOnes();
  truth.sigma = scale.asDiagonal() * corr * scale.asDiagonal();
  truth.mixing = Eigen::LLT<Eigen::MatrixXd>(truth.sigma).matrixL();
  truth.seed = Eigen::MatrixXd::Zero(aps, opts.lag);

  out.history = gen_demand_traces(aps, opts.history, out.true_phi, truth, stream_seed(opts.seed, 4), 0, seasonal);

  const SeasonalFit sf = fit_seasonal(out.history.values, seasonal, 0);
  out.fit = fit_ar(sf.residuals, opts.lag);
  out.fit.phi = sf.phi;
  inst.forecast = seasonal_forecast(sf.phi, opts.history, opts.horizon, seasonal).cwiseMax(0.0);

  if (opts.dynamic) {
    inst.uncertainty.set = out.fit.to_dus(opts.budget);
  } else {
    inst.uncertainty.set = sus_from_alpha(inst.forecast, opts.alpha, opts.budget);
  }
  validate_instance(inst);
  return out;
}

}  // namespace edgeplan
