#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/instance.hpp"
#include "edgeplan/solver.hpp"
#include "edgeplan/uncertainty.hpp"

namespace edgeplan {

/// Semantic address of a variable or row: kind, scenario copy, and up to
/// three indices (unused ones are -1).
struct VarKey {
  std::string kind;
  int copy = -1;
  int a = -1;
  int b = -1;
  int c = -1;

  auto operator<=>(const VarKey&) const = default;
  std::string name() const;
};

/// Bidirectional map between semantic keys and model indices.
class VarMap {
 public:
  void bind_var(const VarKey& key, int index);
  void bind_row(const VarKey& key, int index);

  int var(const VarKey& key) const;
  int row(const VarKey& key) const;
  std::optional<int> find_var(const VarKey& key) const;
  std::optional<int> find_row(const VarKey& key) const;
  const VarKey& key_of_var(int index) const;
  std::size_t size() const { return vars_.size(); }

 private:
  std::map<VarKey, int> vars_;
  std::map<VarKey, int> rows_;
  std::map<int, VarKey> var_keys_;
};

struct BuiltModel {
  LinearModel model;
  VarMap map;
};

/// Modelling switches shared by every builder.
struct ModelOptions {
  /// Force reservation, placement and allocation to stay constant over time.
  bool time_constant = false;
};

/// Values of the binary recourse variables (placement, downloads, startups).
struct BinaryPoint {
  Eigen::MatrixXd placement;                 // z, J x T
  std::vector<Eigen::MatrixXd> download_en;  // q[m], J x T
  Eigen::MatrixXd download_cloud;            // q0, J x T
  Eigen::MatrixXd startup;                   // u, J x T

  /// Install + download + storage cost of these binaries.
  double fixed_cost(const Instance& inst) const;
  friend bool operator==(const BinaryPoint& a, const BinaryPoint& b);
};

/// A fixed binary point and the dual of the allocation/adjustment LP it
/// induces at the current reservation.
struct CutPoint {
  BinaryPoint binaries;
  double fixed_cost = 0.0;
  DualModel dual;
  /// Dual variable index of the demand-coverage row (i, t).
  Eigen::MatrixXi cover_dual;
};

// Second-stage value at fixed reservation and demand, decomposed.
struct RecourseSolution {
  double value = 0.0;
  BinaryPoint binaries;
  RecoursePlan plan;
};

BuiltModel build_det(const Instance& inst, const Eigen::MatrixXd& demand,
                     const ModelOptions& opts = {});

/// Allocation/adjustment LP at fixed reservation and binaries. The fixed
/// binaries' cost is the objective constant.
BuiltModel build_innermost_lp(const Instance& inst, const FirstStage& fs, const BinaryPoint& bin,
                              const Eigen::MatrixXd& demand, const ModelOptions& opts = {});

BuiltModel build_outer_mp(const Instance& inst, const std::vector<Eigen::MatrixXd>& pool,
                          const ModelOptions& opts = {});

BuiltModel build_inner_sp(const Instance& inst, const FirstStage& fs,
                          const Eigen::MatrixXd& demand, const ModelOptions& opts = {});

/// Upper bounds (lower bounds are zero) on the dual of every coverage row,
/// valid over the whole dual-feasible region of the allocation LP.
struct DemandDualBounds {
  Eigen::MatrixXd upper;  // I x T
};

/// Maximizes each coverage dual over the dual polyhedron of the allocation
/// LP. Throws ModelError when a dual is unbounded.
DemandDualBounds derive_demand_dual_bounds(const Instance& inst, const ModelOptions& opts = {},
                                           const SolverParams& params = {});

CutPoint make_cut(const Instance& inst, const FirstStage& fs, const BinaryPoint& bin,
                  const Eigen::MatrixXd& offset, const ModelOptions& opts = {});

/// Worst-case demand MILP over binary drivers g = g+ - g-, one epigraph row
/// per cut with exact product linearization of dual x driver terms.
BuiltModel build_inner_mp(const Instance& inst, const std::vector<CutPoint>& cuts,
                          const AffineDemandMap& demand_map, int budget,
                          const DemandDualBounds& bounds);

BuiltModel build_extreme_scenario(const UncertaintySpec& spec, const Eigen::MatrixXd& forecast);

/// Reads g = g+ - g- from a model built with binary driver pairs.
GCandidate extract_candidate(const VarMap& map, const SolveResult& res, int ap_count, int periods);

FirstStage extract_first_stage(const Instance& inst, const VarMap& map, const SolveResult& res);
RecoursePlan extract_recourse(const Instance& inst, const VarMap& map, const SolveResult& res,
                              int copy = 0);
BinaryPoint extract_binaries(const Instance& inst, const VarMap& map, const SolveResult& res,
                             int copy = 0);

/// Solves the Inner-SP MILP, then re-solves its LP at the rounded binaries so
/// the returned value carries no integrality noise.
RecourseSolution solve_recourse(const Instance& inst, const FirstStage& fs,
                                const Eigen::MatrixXd& demand, const ModelOptions& opts,
                                const SolverParams& params);

/// Reservation cost of a first-stage decision.
double reservation_cost(const Instance& inst, const FirstStage& fs);

// ---------------------------------------------------------------------------
// Static robust baseline: placement and reservation fixed for the horizon,
// time-constant allocation, no buy/sell.

struct SaroFirstStage {
  Eigen::VectorXd placement;  // z, J
  Eigen::VectorXd edge;       // s, J
  double cloud = 0.0;         // s0
};

/// Fixed placement cost of one edge node: installation plus cloud download at
/// the first period when not initially placed, and storage over the horizon.
double saro_placement_cost(const Instance& inst, int j);

/// Worst-case total allocation requirement sum_i max(0, max_t lambda[i][t])
/// over the vertex candidates; recourse is feasible iff w times this fits in
/// the total reservation.
double saro_required_requests(const Instance& inst, const SusSpec& sus, const SolverParams& params);

BuiltModel build_saro_master(const Instance& inst, const std::vector<Eigen::MatrixXd>& pool,
                             double required_requests);
/// Allocation LP at a fixed static first stage. With `allow_unserved`, a
/// per-(i,t) slack served from the cloud at on-spot price keeps every
/// trajectory feasible.
BuiltModel build_saro_recourse(const Instance& inst, const SaroFirstStage& first,
                               const Eigen::MatrixXd& demand, bool allow_unserved = false);
/// Dual bounds valid whenever the static recourse is feasible.
DemandDualBounds saro_demand_dual_bounds(const Instance& inst);
CutPoint make_saro_cut(const Instance& inst, const SaroFirstStage& first,
                       const Eigen::MatrixXd& offset);
SaroFirstStage extract_saro_first_stage(const Instance& inst, const VarMap& map,
                                        const SolveResult& res);
double saro_first_stage_cost(const Instance& inst, const SaroFirstStage& first);
/// Reservation expressed per period, for reporting alongside dynamic models.
FirstStage saro_as_first_stage(const Instance& inst, const SaroFirstStage& first);

}  // namespace edgeplan
