#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/instance.hpp"
#include "edgeplan/uncertainty.hpp"

namespace edgeplan {

/// Undirected graph with per-link delay (ms).
struct Graph {
  struct Link {
    int u;
    int v;
    double delay;
  };
  int nodes = 0;
  std::vector<Link> links;

  std::vector<int> degrees() const;
};

/// Preferential-attachment graph: a complete core of attach+1 nodes, then each
/// new node links to `attach` distinct existing nodes chosen with probability
/// proportional to degree. Link delays are uniform in [delay_lo, delay_hi].
Graph barabasi_albert(int nodes, int attach, double delay_lo, double delay_hi, std::uint64_t seed);

struct ShortestPaths {
  std::vector<double> delay;  // per node; +inf when unreachable
  std::vector<int> hops;      // links on the chosen minimum-delay path; -1 when unreachable
};

ShortestPaths shortest_paths(const Graph& g, int source);

struct TopologyOptions {
  int nodes = 100;
  int attach = 2;
  int aps = 20;
  int ens = 10;
  double delay_lo = 2.0;
  double delay_hi = 10.0;
  /// Extra delay on every link of the cloud node.
  double cloud_delay = 30.0;
  std::uint64_t seed = 1;
};

/// Node roles chosen on the generated graph.
struct Designation {
  int hub = -1;
  std::vector<int> aps;
  std::vector<int> ens;
  int cloud = -1;
};

/// Highest-degree node is the hub; the next `aps` nodes by degree are access
/// points, the following `ens` are edge nodes, and the lowest-degree remaining
/// node hosts the cloud. Ties go to the lower node index. With exactly
/// aps + ens + 1 nodes there is no hub and the APs start at the top.
Designation designate_nodes(const Graph& g, int aps, int ens);

Topology gen_topology(const TopologyOptions& opts);

/// Price and cost schedule sampled from the simulation ranges; see the README
/// for the exact distributions.
CostSchedule gen_costs(int aps, int ens, int periods, std::uint64_t seed);

/// Seasonal mean plus an AR process driven by B times standard normal
/// innovations, clipped at zero. Rows are time indices first_period ...
DemandTraces gen_demand_traces(int aps, int periods, const Eigen::MatrixXd& phi, const ARFit& process,
                               std::uint64_t seed, long first_period = 0,
                               const SeasonalPeriods& seasonal = {});

struct InstanceOptions {
  TopologyOptions topology;
  int horizon = 24;
  int history = 1008;  // two weeks of 20-minute slots
  int lag = 1;
  int budget = 5;
  bool dynamic = true;
  /// Static deviation as a fraction of the forecast.
  double alpha = 0.2;
  std::uint64_t seed = 1;
};

struct GeneratedInstance {
  Instance instance;
  DemandTraces history;
  ARFit fit;
  Eigen::MatrixXd true_phi;
  ARFit true_process;
};

/// Full pipeline: topology and prices, a synthetic demand history from a
/// random seasonal/AR model, estimation on that history, and the forecast plus
/// uncertainty set for the planning horizon that follows it.
GeneratedInstance generate_instance(const InstanceOptions& opts);

/// Static set sized as alpha times the forecast.
SusSpec sus_from_alpha(const Eigen::MatrixXd& forecast, double alpha, int budget);

}  // namespace edgeplan
