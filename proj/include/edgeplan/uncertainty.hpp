#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace edgeplan {

struct SolverParams;

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;

/// Budgeted box around the forecast: lambda = forecast + g * deviation.
struct SusSpec {
  Eigen::MatrixXd deviation;  // I x T, requests
  int budget = 0;
};

/// Residual process: r[t] = sum_s A[:, s] .* r[t-s] + B * g[t].
struct DusSpec {
  int lag = 1;
  Eigen::MatrixXd ar;              // I x L, column s-1 holds lag s
  Eigen::MatrixXd mixing;          // I x I
  Eigen::MatrixXd seed_residuals;  // I x L, chronological, last column is period 0
  int budget = 0;
};

struct UncertaintySpec {
  std::variant<SusSpec, DusSpec> set;
  /// Replace negative realized demand with zero. Off by default.
  bool clip = false;

  bool is_dynamic() const { return std::holds_alternative<DusSpec>(set); }
  int budget() const;
  const SusSpec& sus() const { return std::get<SusSpec>(set); }
  const DusSpec& dus() const { return std::get<DusSpec>(set); }
};

class BudgetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One vertex realization of the deviation drivers, entries in {-1, 0, +1}.
struct GCandidate {
  IntMatrix g;  // I x T

  static GCandidate zeros(int ap_count, int periods);
  bool within_budget(int budget) const;
  /// Short stable hex digest, used in iteration logs and pool dedup output.
  std::string digest() const;
  friend bool operator==(const GCandidate& a, const GCandidate& b) {
    return a.g.rows() == b.g.rows() && a.g.cols() == b.g.cols() && a.g == b.g;
  }
};

/// lambda[i][t] = offset[i][t] + sum_{i', tau <= t} coef(i, t, i', tau) * g[i'][tau]
struct AffineDemandMap {
  int ap_count = 0;
  int periods = 0;
  Eigen::MatrixXd offset;        // I x T
  Eigen::MatrixXd coefficients;  // (I*T) x (I*T), flat index t * I + i

  int flat(int i, int t) const { return t * ap_count + i; }
  double coef(int i, int t, int i2, int tau) const {
    return coefficients(flat(i, t), flat(i2, tau));
  }
  Eigen::MatrixXd apply(const GCandidate& g) const;
};

std::vector<std::string> check_uncertainty(const UncertaintySpec& spec, int ap_count, int periods);

Eigen::MatrixXd realize(const SusSpec& spec, const Eigen::MatrixXd& forecast, const GCandidate& g);
Eigen::MatrixXd realize(const DusSpec& spec, const Eigen::MatrixXd& forecast, const GCandidate& g);
Eigen::MatrixXd realize(const UncertaintySpec& spec, const Eigen::MatrixXd& forecast,
                        const GCandidate& g);

AffineDemandMap unroll_affine(const SusSpec& spec, const Eigen::MatrixXd& forecast);
AffineDemandMap unroll_affine(const DusSpec& spec, const Eigen::MatrixXd& forecast);
AffineDemandMap unroll_affine(const UncertaintySpec& spec, const Eigen::MatrixXd& forecast);

/// Number of vertex candidates, (sum_{k<=budget} C(I,k) 2^k)^T. Saturates at
/// UINT64_MAX instead of overflowing.
std::uint64_t candidate_count(int ap_count, int periods, int budget);

inline constexpr std::uint64_t kDefaultCandidateCap = 20000;

/// All g with entries in {-1,0,1} and at most `budget` nonzeros per period,
/// in a fixed lexicographic order. Throws CapExceeded above `cap`.
std::vector<GCandidate> enumerate_candidates(int ap_count, int periods, int budget,
                                             std::uint64_t cap = kDefaultCandidateCap);

/// Candidate maximizing total realized demand. The static case is solved by
/// sorting, the dynamic case by a small MILP.
std::pair<GCandidate, Eigen::MatrixXd> extreme_total_demand(const UncertaintySpec& spec,
                                                            const Eigen::MatrixXd& forecast,
                                                            const SolverParams& params);

// ---------------------------------------------------------------------------
// Estimation

/// Seasonal periods (in slots) of the two harmonic pairs; 72 and 36 are the
/// daily and half-daily cycles at 20-minute resolution.
struct SeasonalPeriods {
  double primary = 72.0;
  double secondary = 36.0;
};

inline constexpr int kSeasonalTerms = 5;

/// Basis row [1, cos(2 pi t/P1), sin(2 pi t/P1), cos(2 pi t/P2), sin(2 pi t/P2)].
Eigen::RowVectorXd seasonal_basis(double t, const SeasonalPeriods& periods);

struct SeasonalFit {
  Eigen::MatrixXd phi;        // I x 5
  Eigen::MatrixXd residuals;  // n x I
  Eigen::VectorXd r_squared;  // I
  std::vector<int> rank_deficient_areas;
  SeasonalPeriods periods;
  long first_period = 0;  // time index of the first trace row
};

/// Least-squares fit of the harmonic basis per area. `values` is n x I and
/// row k corresponds to time index first_period + k.
SeasonalFit fit_seasonal(const Eigen::MatrixXd& values, const SeasonalPeriods& periods = {},
                         long first_period = 0);

/// Forecast I x T for time indices first_period .. first_period + T - 1.
Eigen::MatrixXd seasonal_forecast(const Eigen::MatrixXd& phi, long first_period, int periods,
                                  const SeasonalPeriods& seasonal = {});

struct ARFit {
  Eigen::MatrixXd phi;    // I x 5, may be empty when fitted from residuals only
  int lag = 1;
  Eigen::MatrixXd ar;     // I x L
  Eigen::MatrixXd mixing; // I x I, lower-triangular Cholesky factor of sigma
  Eigen::MatrixXd seed;   // I x L, last L residuals in chronological order
  Eigen::MatrixXd sigma;  // I x I innovation covariance
  Eigen::VectorXd fit_r_squared;  // I, one-step AR fit quality per area

  DusSpec to_dus(int budget) const;
};

/// Per-area AR(L) by least squares, innovation covariance, and its Cholesky
/// factor. `residuals` is n x I with n >= 10 * L * I.
ARFit fit_ar(const Eigen::MatrixXd& residuals, int lag);

std::string ar_fit_to_json(const ARFit& fit);
ARFit ar_fit_from_json(const std::string& text);

}  // namespace edgeplan
