#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "edgeplan/instance.hpp"
#include "edgeplan/models.hpp"
#include "edgeplan/rod.hpp"
#include "edgeplan/solver.hpp"

namespace edgeplan {

/// Realized costs of one policy over a set of demand trajectories.
struct PolicyReport {
  std::string policy;
  double mean_total = 0.0;
  double mean_payment = 0.0;
  double mean_adjust = 0.0;
  double worst_total = 0.0;
  /// Mean cost of demand the static policy could not serve from its
  /// reservation and had to buy on demand from the cloud; zero otherwise.
  double mean_unserved = 0.0;
  std::vector<double> samples;  // realized total per trajectory
  std::vector<CostBreakdown> breakdowns;
};

struct EvalReport {
  std::vector<PolicyReport> policies;
  int trajectories = 0;
  std::uint64_t seed = 0;

  std::string to_json() const;
  /// One row per trajectory, one total-cost column per policy.
  std::string samples_csv() const;
};

/// Demand paths drawn from the instance's uncertainty set with standard normal
/// drivers in place of the budgeted vertices, clipped at zero.
std::vector<Eigen::MatrixXd> sample_trajectories(const UncertaintySpec& spec,
                                                 const Eigen::MatrixXd& forecast, int count,
                                                 std::uint64_t seed);

/// Re-plans the recourse MILP at a fixed reservation for every trajectory.
PolicyReport monte_carlo_eval(const Instance& inst, const FirstStage& fs,
                              const std::vector<Eigen::MatrixXd>& trajectories,
                              const std::string& policy, const SolverParams& params = {},
                              const ModelOptions& opts = {});

/// Static policy: fixed placement and reservation, time-constant allocation,
/// shortfall bought on demand at the cloud.
PolicyReport monte_carlo_eval(const Instance& inst, const SaroFirstStage& first,
                              const std::vector<Eigen::MatrixXd>& trajectories,
                              const std::string& policy, const SolverParams& params = {});

/// Dispatches on whether the result carries a static first stage.
PolicyReport evaluate_result(const Instance& inst, const RodResult& result,
                             const std::vector<Eigen::MatrixXd>& trajectories,
                             const SolverParams& params = {}, const ModelOptions& opts = {});

/// Same set with a different per-period budget.
UncertaintySpec with_budget(const UncertaintySpec& spec, int budget);

/// Cost parameter families scaled in the sensitivity sweeps.
enum class CostAxis { kInstall, kDownload, kReserve, kBuy };

CostAxis parse_cost_axis(const std::string& name);
std::string to_string(CostAxis axis);
/// Multiplies every price of the family by `factor`; sell prices are clamped
/// to the reserve price so the instance stays valid.
Instance scale_costs(const Instance& inst, CostAxis axis, double factor);

struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::string model;
  double objective = 0.0;
  double lower_bound = 0.0;
  double gap = 0.0;
  bool converged = false;
  CostBreakdown breakdown;
};

std::vector<SweepRow> gamma_sweep(const Instance& inst, Baseline which, const std::vector<int>& budgets,
                                  const RodConfig& cfg);
std::vector<SweepRow> cost_sweep(const Instance& inst, Baseline which, CostAxis axis,
                                 const std::vector<double>& factors, const RodConfig& cfg);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace edgeplan
