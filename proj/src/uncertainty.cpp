#include "edgeplan/uncertainty.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <numbers>

#include "edgeplan/instance.hpp"
#include "edgeplan/json_io.hpp"
#include "edgeplan/models.hpp"
#include "edgeplan/solver.hpp"

namespace edgeplan {

int UncertaintySpec::budget() const {
  return std::visit([](const auto& s) { return s.budget; }, set);
}

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

std::string dims(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_forecast(const Eigen::MatrixXd& forecast, const GCandidate& g) {
  if (g.g.rows() != forecast.rows() || g.g.cols() != forecast.cols())
    throw DimensionError("candidate is " + std::to_string(g.g.rows()) + "x" +
                         std::to_string(g.g.cols()) + " but forecast is " + dims(forecast));
}

}  // namespace

std::vector<std::string> check_uncertainty(const UncertaintySpec& spec, int I, int T) {
  std::vector<std::string> out;
  const int budget = spec.budget();
  if (budget < 0 || budget > I) out.push_back("budget must lie in [0, ap_count]");
  if (!spec.is_dynamic()) {
    const auto& s = spec.sus();
    if (s.deviation.rows() != I || s.deviation.cols() != T)
      out.push_back("deviation must be " + std::to_string(I) + "x" + std::to_string(T));
    else if (!all_finite(s.deviation) || (s.deviation.array() < 0).any())
      out.push_back("deviation must be finite and nonnegative");
  } else {
    const auto& d = spec.dus();
    if (d.lag < 1) {
      out.push_back("lag must be >= 1");
      return out;
    }
    if (d.ar.rows() != I || d.ar.cols() != d.lag)
      out.push_back("ar must be " + std::to_string(I) + "x" + std::to_string(d.lag));
    if (d.mixing.rows() != I || d.mixing.cols() != I)
      out.push_back("mixing must be " + std::to_string(I) + "x" + std::to_string(I));
    if (d.seed_residuals.rows() != I || d.seed_residuals.cols() != d.lag)
      out.push_back("seed_residuals must be " + std::to_string(I) + "x" + std::to_string(d.lag));
    if (out.empty() &&
        !(all_finite(d.ar) && all_finite(d.mixing) && all_finite(d.seed_residuals)))
      out.push_back("dynamic set parameters must be finite");
  }
  return out;
}

GCandidate GCandidate::zeros(int ap_count, int periods) {
  return {IntMatrix::Zero(ap_count, periods)};
}

bool GCandidate::within_budget(int budget) const {
  for (Eigen::Index t = 0; t < g.cols(); ++t) {
    int used = 0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const int v = g(i, t);
      if (v < -1 || v > 1) return false;
      used += std::abs(v);
    }
    if (used > budget) return false;
  }
  return true;
}

std::string GCandidate::digest() const {
  // FNV-1a over shape and entries.
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::int64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>((v >> (8 * b)) & 0xff);
      h *= 1099511628211ULL;
    }
  };
  mix(g.rows());
  mix(g.cols());
  for (Eigen::Index t = 0; t < g.cols(); ++t)
    for (Eigen::Index i = 0; i < g.rows(); ++i) mix(g(i, t));
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Eigen::MatrixXd AffineDemandMap::apply(const GCandidate& g) const {
  if (g.g.rows() != ap_count || g.g.cols() != periods)
    throw DimensionError("candidate does not match the demand map");
  Eigen::VectorXd flat_g(ap_count * periods);
  for (int t = 0; t < periods; ++t)
    for (int i = 0; i < ap_count; ++i) flat_g(flat(i, t)) = g.g(i, t);
  const Eigen::VectorXd dev = coefficients * flat_g;
  Eigen::MatrixXd out = offset;
  for (int t = 0; t < periods; ++t)
    for (int i = 0; i < ap_count; ++i) out(i, t) += dev(flat(i, t));
  return out;
}

Eigen::MatrixXd realize(const SusSpec& spec, const Eigen::MatrixXd& forecast, const GCandidate& g) {
  check_forecast(forecast, g);
  if (spec.deviation.rows() != forecast.rows() || spec.deviation.cols() != forecast.cols())
    throw DimensionError("deviation does not match the forecast");
  if (!g.within_budget(spec.budget)) throw BudgetError("candidate violates the per-period budget");
  return forecast + g.g.cast<double>().cwiseProduct(spec.deviation);
}

Eigen::MatrixXd realize(const DusSpec& spec, const Eigen::MatrixXd& forecast, const GCandidate& g) {
  check_forecast(forecast, g);
  const int I = static_cast<int>(forecast.rows()), T = static_cast<int>(forecast.cols());
  const int L = spec.lag;
  if (spec.ar.rows() != I || spec.ar.cols() != L || spec.mixing.rows() != I ||
      spec.mixing.cols() != I || spec.seed_residuals.rows() != I || spec.seed_residuals.cols() != L)
    throw DimensionError("dynamic set parameters do not match the forecast");
  if (!g.within_budget(spec.budget)) throw BudgetError("candidate violates the per-period budget");
  Eigen::MatrixXd r(I, T);
  for (int t = 0; t < T; ++t) {
    Eigen::VectorXd cur = spec.mixing * g.g.col(t).cast<double>();
    for (int s = 1; s <= L; ++s) {
      const Eigen::VectorXd prev =
          t - s >= 0 ? Eigen::VectorXd(r.col(t - s)) : Eigen::VectorXd(spec.seed_residuals.col(t - s + L));
      cur += spec.ar.col(s - 1).cwiseProduct(prev);
    }
    r.col(t) = cur;
  }
  return forecast + r;
}

Eigen::MatrixXd realize(const UncertaintySpec& spec, const Eigen::MatrixXd& forecast,
                        const GCandidate& g) {
  Eigen::MatrixXd out = spec.is_dynamic() ? realize(spec.dus(), forecast, g)
                                          : realize(spec.sus(), forecast, g);
  if (spec.clip) out = out.cwiseMax(0.0);
  return out;
}

AffineDemandMap unroll_affine(const SusSpec& spec, const Eigen::MatrixXd& forecast) {
  const int I = static_cast<int>(forecast.rows()), T = static_cast<int>(forecast.cols());
  if (spec.deviation.rows() != I || spec.deviation.cols() != T)
    throw DimensionError("deviation does not match the forecast");
  AffineDemandMap m{I, T, forecast, Eigen::MatrixXd::Zero(I * T, I * T)};
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < I; ++i) m.coefficients(m.flat(i, t), m.flat(i, t)) = spec.deviation(i, t);
  return m;
}

AffineDemandMap unroll_affine(const DusSpec& spec, const Eigen::MatrixXd& forecast) {
  const int I = static_cast<int>(forecast.rows()), T = static_cast<int>(forecast.cols());
  AffineDemandMap m{I, T, realize(spec, forecast, GCandidate::zeros(I, T)),
                    Eigen::MatrixXd::Zero(I * T, I * T)};
  // Impulse responses: H[0] = B, H[k] = sum_s diag(A_s) H[k-s].
  std::vector<Eigen::MatrixXd> H(T);
  for (int k = 0; k < T; ++k) {
    if (k == 0) {
      H[k] = spec.mixing;
      continue;
    }
    H[k] = Eigen::MatrixXd::Zero(I, I);
    for (int s = 1; s <= std::min(k, spec.lag); ++s)
      H[k] += spec.ar.col(s - 1).asDiagonal() * H[k - s];
  }
  for (int t = 0; t < T; ++t)
    for (int tau = 0; tau <= t; ++tau)
      for (int i = 0; i < I; ++i)
        for (int i2 = 0; i2 < I; ++i2) m.coefficients(m.flat(i, t), m.flat(i2, tau)) = H[t - tau](i, i2);
  return m;
}

AffineDemandMap unroll_affine(const UncertaintySpec& spec, const Eigen::MatrixXd& forecast) {
  return spec.is_dynamic() ? unroll_affine(spec.dus(), forecast)
                           : unroll_affine(spec.sus(), forecast);
}

std::uint64_t candidate_count(int I, int T, int budget) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  if (budget < 0 || I < 0 || T < 0) return 0;
  budget = std::min(budget, I);
  // Per-period count sum_k C(I,k) 2^k; saturate on overflow.
  std::uint64_t per = 0;
  std::uint64_t binom = 1;
  for (int k = 0; k <= budget; ++k) {
    if (k > 0) {
      // binom = C(I, k) computed incrementally; the division is exact.
      if (binom > kMax / static_cast<std::uint64_t>(I - k + 1)) return kMax;
      binom = binom * static_cast<std::uint64_t>(I - k + 1) / static_cast<std::uint64_t>(k);
    }
    if (k >= 64) return kMax;
    const std::uint64_t pow2 = std::uint64_t{1} << k;
    if (binom > kMax / pow2) return kMax;
    const std::uint64_t term = binom * pow2;
    if (per > kMax - term) return kMax;
    per += term;
  }
  std::uint64_t total = 1;
  for (int t = 0; t < T; ++t) {
    if (per != 0 && total > kMax / per) return kMax;
    total *= per;
  }
  return total;
}

std::vector<GCandidate> enumerate_candidates(int I, int T, int budget, std::uint64_t cap) {
  if (budget < 0 || budget > I) throw BudgetError("budget must lie in [0, ap_count]");
  const std::uint64_t count = candidate_count(I, T, budget);
  if (count > cap)
    throw CapExceeded("candidate count " + std::to_string(count) + " exceeds the cap of " +
                      std::to_string(cap));
  // Per-period columns in lexicographic order over (-1, 0, +1)^I.
  std::vector<Eigen::VectorXi> columns;
  Eigen::VectorXi col = Eigen::VectorXi::Constant(I, -1);
  while (true) {
    if (col.cwiseAbs().sum() <= budget) columns.push_back(col);
    int k = I - 1;
    while (k >= 0 && col(k) == 1) col(k--) = -1;
    if (k < 0) break;
    ++col(k);
  }
  std::vector<GCandidate> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> pick(T, 0);
  while (true) {
    GCandidate g{IntMatrix(I, T)};
    for (int t = 0; t < T; ++t) g.g.col(t) = columns[pick[t]];
    out.push_back(std::move(g));
    int t = T - 1;
    while (t >= 0 && pick[t] + 1 == columns.size()) pick[t--] = 0;
    if (t < 0) break;
    ++pick[t];
  }
  return out;
}

std::pair<GCandidate, Eigen::MatrixXd> extreme_total_demand(const UncertaintySpec& spec,
                                                            const Eigen::MatrixXd& forecast,
                                                            const SolverParams& params) {
  const int I = static_cast<int>(forecast.rows()), T = static_cast<int>(forecast.cols());
  auto problems = check_uncertainty(spec, I, T);
  if (!problems.empty()) throw DimensionError("invalid uncertainty set: " + problems.front());
  GCandidate g = GCandidate::zeros(I, T);
  if (!spec.is_dynamic()) {
    const auto& dev = spec.sus().deviation;
    for (int t = 0; t < T; ++t) {
      std::vector<int> order(I);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return dev(a, t) > dev(b, t); });
      for (int k = 0; k < spec.budget() && k < I; ++k)
        if (dev(order[k], t) > 0) g.g(order[k], t) = 1;
    }
  } else {
    BuiltModel bm = build_extreme_scenario(spec, forecast);
    SolveResult res = solve(bm.model, params);
    if (!res.optimal())
      throw BackendError("extreme-scenario MILP ended with status " + to_string(res.status));
    g = extract_candidate(bm.map, res, I, T);
  }
  return {g, realize(spec, forecast, g)};
}

// ---------------------------------------------------------------------------
// Estimation

Eigen::RowVectorXd seasonal_basis(double t, const SeasonalPeriods& periods) {
  const double w1 = 2.0 * std::numbers::pi * t / periods.primary;
  const double w2 = 2.0 * std::numbers::pi * t / periods.secondary;
  Eigen::RowVectorXd row(kSeasonalTerms);
  row << 1.0, std::cos(w1), std::sin(w1), std::cos(w2), std::sin(w2);
  return row;
}

SeasonalFit fit_seasonal(const Eigen::MatrixXd& values, const SeasonalPeriods& periods,
                         long first_period) {
  const Eigen::Index n = values.rows();
  const double longest = std::max(periods.primary, periods.secondary);
  if (static_cast<double>(n) < 2.0 * longest)
    throw std::invalid_argument("seasonal fit needs at least two full cycles (" +
                                std::to_string(static_cast<long>(2.0 * longest)) + " periods)");
  if (!values.allFinite()) throw std::invalid_argument("traces contain non-finite values");
  Eigen::MatrixXd X(n, kSeasonalTerms);
  for (Eigen::Index k = 0; k < n; ++k)
    X.row(k) = seasonal_basis(static_cast<double>(first_period + k), periods);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(X);
  SeasonalFit fit;
  fit.periods = periods;
  fit.first_period = first_period;
  fit.phi = cod.solve(values).transpose();
  fit.residuals = values - X * fit.phi.transpose();
  fit.r_squared.resize(values.cols());
  for (Eigen::Index i = 0; i < values.cols(); ++i) {
    const double mean = values.col(i).mean();
    const double sst = (values.col(i).array() - mean).square().sum();
    const double sse = fit.residuals.col(i).squaredNorm();
    fit.r_squared(i) = sst > 0 ? 1.0 - sse / sst : 1.0;
    if (cod.rank() < kSeasonalTerms) fit.rank_deficient_areas.push_back(static_cast<int>(i));
  }
  return fit;
}

Eigen::MatrixXd seasonal_forecast(const Eigen::MatrixXd& phi, long first_period, int periods,
                                  const SeasonalPeriods& seasonal) {
  if (phi.cols() != kSeasonalTerms) throw DimensionError("seasonal coefficients must be I x 5");
  Eigen::MatrixXd out(phi.rows(), periods);
  for (int t = 0; t < periods; ++t)
    out.col(t) = phi * seasonal_basis(static_cast<double>(first_period + t), seasonal).transpose();
  return out;
}

DusSpec ARFit::to_dus(int budget) const {
  DusSpec d;
  d.lag = lag;
  d.ar = ar;
  d.mixing = mixing;
  d.seed_residuals = seed;
  d.budget = budget;
  return d;
}

ARFit fit_ar(const Eigen::MatrixXd& residuals, int lag) {
  if (lag < 1) throw std::invalid_argument("lag must be >= 1");
  const Eigen::Index n = residuals.rows();
  const int I = static_cast<int>(residuals.cols());
  if (I < 1) throw std::invalid_argument("residual series has no areas");
  if (n < 10L * lag * I)
    throw std::invalid_argument("residual series too short: need at least " +
                                std::to_string(10L * lag * I) + " periods");
  if (!residuals.allFinite()) throw std::invalid_argument("residuals contain non-finite values");

  ARFit fit;
  fit.lag = lag;
  fit.ar.resize(I, lag);
  fit.fit_r_squared.resize(I);
  const Eigen::Index m = n - lag;
  Eigen::MatrixXd innovations(m, I);
  for (int i = 0; i < I; ++i) {
    Eigen::MatrixXd X(m, lag);
    for (Eigen::Index k = 0; k < m; ++k)
      for (int s = 1; s <= lag; ++s) X(k, s - 1) = residuals(lag + k - s, i);
    const Eigen::VectorXd y = residuals.col(i).tail(m);
    const Eigen::VectorXd a = X.completeOrthogonalDecomposition().solve(y);
    fit.ar.row(i) = a.transpose();
    innovations.col(i) = y - X * a;
    const double sst = (y.array() - y.mean()).square().sum();
    fit.fit_r_squared(i) = sst > 0 ? 1.0 - innovations.col(i).squaredNorm() / sst : 1.0;
  }
  const Eigen::RowVectorXd mean = innovations.colwise().mean();
  const Eigen::MatrixXd centered = innovations.rowwise() - mean;
  fit.sigma = centered.transpose() * centered / static_cast<double>(std::max<Eigen::Index>(m - 1, 1));
  fit.sigma = 0.5 * (fit.sigma + fit.sigma.transpose());

  const double scale = fit.sigma.trace() / I > 0 ? fit.sigma.trace() / I : 1.0;
  Eigen::MatrixXd work = fit.sigma;
  double jitter = 1e-10 * scale;
  for (int attempt = 0;; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() == Eigen::Success) {
      fit.mixing = llt.matrixL();
      break;
    }
    if (attempt >= 12) throw std::runtime_error("innovation covariance is not positive semidefinite");
    work = fit.sigma;
    work.diagonal().array() += jitter;
    jitter *= 10.0;
  }
  fit.seed = residuals.bottomRows(lag).transpose();
  return fit;
}

std::string ar_fit_to_json(const ARFit& fit) {
  jsonio::json j;
  j["phi"] = jsonio::from_matrix(fit.phi);
  j["lag"] = fit.lag;
  j["A"] = jsonio::from_matrix(fit.ar);
  j["B"] = jsonio::from_matrix(fit.mixing);
  j["seed"] = jsonio::from_matrix(fit.seed);
  j["Sigma"] = jsonio::from_matrix(fit.sigma);
  j["fit_r_squared"] = jsonio::from_vector(fit.fit_r_squared);
  return j.dump(2) + "\n";
}

ARFit ar_fit_from_json(const std::string& text) {
  jsonio::json j;
  try {
    j = jsonio::json::parse(text);
  } catch (const jsonio::json::parse_error& e) {
    throw ParseError(std::string("malformed fit JSON: ") + e.what());
  }
  ARFit fit;
  fit.ar = jsonio::to_matrix(jsonio::require(j, "A"), -1, -1, "A");
  const int I = static_cast<int>(fit.ar.rows());
  fit.lag = j.value("lag", static_cast<int>(fit.ar.cols()));
  if (fit.lag != fit.ar.cols()) throw ParseError("A must have one column per lag");
  fit.mixing = jsonio::to_matrix(jsonio::require(j, "B"), I, I, "B");
  fit.seed = jsonio::to_matrix(jsonio::require(j, "seed"), I, fit.lag, "seed");
  fit.sigma = jsonio::to_matrix(jsonio::require(j, "Sigma"), I, I, "Sigma");
  if (j.contains("phi") && !j.at("phi").empty())
    fit.phi = jsonio::to_matrix(j.at("phi"), I, kSeasonalTerms, "phi");
  if (j.contains("fit_r_squared"))
    fit.fit_r_squared = jsonio::to_vector(j.at("fit_r_squared"), I, "fit_r_squared");
  return fit;
}

}  // namespace edgeplan
