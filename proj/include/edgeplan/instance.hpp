#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/uncertainty.hpp"

namespace edgeplan {

/// Feasibility tolerance used for every validation check.
inline constexpr double kFeasTol = 1e-6;

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Network between access points (rows) and edge nodes (columns), plus the
/// per-AP route to the cloud. Delays in ms, hops as counts.
struct Topology {
  int ap_count = 0;
  int en_count = 0;
  Eigen::MatrixXd delay_edge;  // I x J
  Eigen::VectorXd delay_cloud; // I
  Eigen::MatrixXd hops_edge;   // I x J
  Eigen::VectorXd hops_cloud;  // I
};

/// Prices per (node, period). Edge arrays are J x T, cloud arrays length T.
struct CostSchedule {
  double slot_length = 1.0 / 3.0;  // hours
  Eigen::MatrixXd reserve_price_edge;
  Eigen::VectorXd reserve_price_cloud;
  Eigen::MatrixXd buy_price_edge;
  Eigen::VectorXd buy_price_cloud;
  Eigen::MatrixXd sell_price_edge;
  Eigen::VectorXd sell_price_cloud;
  Eigen::MatrixXd install_cost;         // J x T
  Eigen::MatrixXd storage_cost;         // J x T
  std::vector<Eigen::MatrixXd> download_en;  // [m] -> J x T, cost of m -> j
  Eigen::MatrixXd download_cloud;       // J x T
  double bandwidth_unit = 0.02;
  double request_size = 0.02;
  double resource_per_request = 0.02;
  double delay_penalty = 0.0001;
  Eigen::VectorXd capacity;             // J
  std::vector<int> initial_placement;   // J, 0/1
};

struct Instance {
  Topology topology;
  CostSchedule costs;
  int horizon = 1;
  Eigen::MatrixXd forecast;  // I x T
  UncertaintySpec uncertainty;

  int aps() const { return topology.ap_count; }
  int ens() const { return topology.en_count; }
  int periods() const { return horizon; }

  /// Per-request delay plus bandwidth cost for AP i served at EN j.
  double edge_unit_cost(int i, int j) const;
  /// Same for AP i served at the cloud.
  double cloud_unit_cost(int i) const;
};

/// Returns every violated invariant; empty when the instance is valid.
std::vector<std::string> check_instance(const Instance& inst);
/// Throws ValidationError when check_instance reports anything.
void validate_instance(const Instance& inst);

Instance load_instance(const std::filesystem::path& path);
Instance parse_instance(const std::string& json_text);
std::string serialize_instance(const Instance& inst);
void save_instance(const Instance& inst, const std::filesystem::path& path);

/// Reservation amounts chosen before demand is revealed.
struct FirstStage {
  Eigen::MatrixXd edge;   // J x T
  Eigen::VectorXd cloud;  // T

  static FirstStage zeros(int en_count, int periods);
};

/// Second-stage decisions for one demand realization.
struct RecoursePlan {
  Eigen::MatrixXd placement;                 // z, J x T
  Eigen::MatrixXd startup;                   // u, J x T
  std::vector<Eigen::MatrixXd> download_en;  // q[m], J x T
  Eigen::MatrixXd download_cloud;            // q0, J x T
  std::vector<Eigen::MatrixXd> alloc_edge;   // x[i], J x T
  Eigen::MatrixXd alloc_cloud;               // x0, I x T
  Eigen::MatrixXd buy_edge;                  // yB, J x T
  Eigen::VectorXd buy_cloud;                 // yB0, T
  Eigen::MatrixXd sell_edge;                 // yS, J x T
  Eigen::VectorXd sell_cloud;                // yS0, T

  static RecoursePlan zeros(int ap_count, int en_count, int periods);
};

struct CostBreakdown {
  double reserve = 0;    // resource reservation
  double adjust = 0;     // buy-more minus sell-back
  double install = 0;
  double download = 0;
  double storage = 0;
  double delay = 0;
  double bandwidth = 0;
  double total = 0;

  /// Procurement, adjustment, placement and storage; excludes QoS penalties.
  double payment() const { return reserve + adjust + install + download + storage; }
};

CostBreakdown cost_breakdown(const Instance& inst, const FirstStage& fs, const RecoursePlan& rp);

/// Checks demand coverage, capacity coupling, sell-back limits, cloud balance,
/// download/placement logic and variable domains. Each returned string names
/// the violated rule and the offending index.
std::vector<std::string> validate_recourse(const Instance& inst, const FirstStage& fs,
                                           const RecoursePlan& rp, const Eigen::MatrixXd& demand);

/// Historical demand traces: one row per period, one column per area.
struct DemandTraces {
  std::vector<long> periods;
  Eigen::MatrixXd values;  // periods x I
};

DemandTraces read_traces_csv(const std::filesystem::path& path);
DemandTraces parse_traces_csv(const std::string& text);
std::string format_traces_csv(const DemandTraces& traces);

}  // namespace edgeplan
