#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/instance.hpp"
#include "edgeplan/models.hpp"
#include "edgeplan/solver.hpp"
#include "edgeplan/uncertainty.hpp"

namespace edgeplan {

/// One line of the iteration log.
struct IterationRecord {
  std::string level;  // "outer" or "inner"
  int outer = 0;      // k
  int inner = 0;      // r, 0 on outer lines
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
  double wall_ms = 0.0;
  std::string scenario_digest;

  std::string to_json() const;
};

struct RodConfig {
  double outer_gap = 1e-3;
  double inner_gap = 1e-3;
  int max_outer = 50;
  int max_inner = 100;
  SolverParams solver;
  ModelOptions model;
  /// Called once per logged iteration, in order.
  std::function<void(const IterationRecord&)> on_iteration;

  /// Throws std::invalid_argument when a tolerance or cap is out of range.
  void check() const;
};

/// (UB - LB) / max(|UB|, 1e-12); infinite while either bound is.
double relative_gap(double lower, double upper);

struct InnerTrace {
  std::vector<double> lower;  // LB after each iteration r
  std::vector<double> upper;  // UB after each iteration r
  int iterations = 0;
  bool converged = false;
  std::string diagnostic;
};

struct InnerResult {
  GCandidate worst;
  Eigen::MatrixXd demand;
  double value = 0.0;        // Q, the converged upper bound
  double lower_bound = 0.0;  // recourse value at `worst`
  std::vector<CutPoint> cuts;
  InnerTrace trace;
};

struct ScenarioEntry {
  GCandidate g;
  Eigen::MatrixXd demand;
};

struct RodResult {
  std::string model;
  FirstStage first_stage;
  std::optional<SaroFirstStage> static_first_stage;
  double objective = 0.0;  // best upper bound
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double gap = 0.0;
  bool converged = false;
  std::string diagnostic;
  int outer_iterations = 0;
  std::vector<double> lower_trace;
  std::vector<double> upper_trace;
  std::vector<double> iteration_ms;
  std::vector<InnerTrace> inner_runs;
  std::vector<std::size_t> cut_counts;
  std::vector<ScenarioEntry> pool;
  double wall_ms = 0.0;
  /// Cost components at the returned first stage under its worst scenario.
  CostBreakdown breakdown;
  RecoursePlan worst_plan;
  Eigen::MatrixXd worst_demand;
  std::vector<IterationRecord> log;
};

/// Worst-case recourse value at a fixed reservation by alternating the
/// recourse MILP with the dualized worst-case MILP.
InnerResult inner_loop(const Instance& inst, const FirstStage& fs, const AffineDemandMap& demand_map,
                       int budget, const DemandDualBounds& bounds, const RodConfig& cfg,
                       const GCandidate& start, int outer_index = 0,
                       std::vector<IterationRecord>* log = nullptr);

/// Convenience overload: unrolls the set, derives dual bounds and starts from
/// the extreme total-demand scenario.
InnerResult inner_loop(const Instance& inst, const FirstStage& fs, const UncertaintySpec& spec,
                       const RodConfig& cfg);

/// Nested decomposition for the two-stage robust model with integer recourse.
RodResult solve_rod(const Instance& inst, const UncertaintySpec& spec, const RodConfig& cfg);

enum class Baseline { kDet, kSaro, kDaroSus, kDaroDus };

Baseline parse_baseline(const std::string& name);
std::string to_string(Baseline b);

/// Memoryless set with the same per-area innovation scale as `dus`: deviation
/// is the row norm of the mixing matrix.
SusSpec memoryless_from_dus(const DusSpec& dus, int periods);

RodResult solve_det(const Instance& inst, const RodConfig& cfg);
/// Classic two-stage column-and-constraint generation for the static baseline.
RodResult solve_saro(const Instance& inst, const SusSpec& sus, const RodConfig& cfg);
RodResult solve_baseline(const Instance& inst, Baseline which, const UncertaintySpec& spec,
                         const RodConfig& cfg);

std::string rod_result_to_json(const RodResult& result);

}  // namespace edgeplan
