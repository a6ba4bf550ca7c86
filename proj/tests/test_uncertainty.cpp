#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <string>

#include "edgeplan/scenario_gen.hpp"
#include "edgeplan/solver.hpp"
#include "edgeplan/uncertainty.hpp"
#include "fixtures.hpp"

using namespace edgeplan;

namespace {

DusSpec scalar_ar1(double a, double b, double seed = 0.0, int budget = 1) {
  DusSpec d;
  d.lag = 1;
  d.ar = Eigen::MatrixXd::Constant(1, 1, a);
  d.mixing = Eigen::MatrixXd::Constant(1, 1, b);
  d.seed_residuals = Eigen::MatrixXd::Constant(1, 1, seed);
  d.budget = budget;
  return d;
}

GCandidate make_g(std::initializer_list<std::initializer_list<int>> rows) {
  const int I = static_cast<int>(rows.size());
  const int T = static_cast<int>(rows.begin()->size());
  GCandidate g = GCandidate::zeros(I, T);
  int i = 0;
  for (const auto& r : rows) {
    int t = 0;
    for (int v : r) g.g(i, t++) = v;
    ++i;
  }
  return g;
}

DusSpec random_dus(std::mt19937_64& rng, int I, int L, int budget) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DusSpec d;
  d.lag = L;
  d.ar = Eigen::MatrixXd::NullaryExpr(I, L, [&] { return 0.4 * U(rng); });
  d.mixing = Eigen::MatrixXd::NullaryExpr(I, I, [&] { return 5.0 * U(rng); });
  d.seed_residuals = Eigen::MatrixXd::NullaryExpr(I, L, [&] { return 3.0 * U(rng); });
  d.budget = budget;
  return d;
}

}  // namespace

TEST_CASE("static set with a zero driver returns the forecast") {
  SusSpec s{Eigen::MatrixXd::Constant(1, 1, 2.0), 1};
  const Eigen::MatrixXd lam = realize(s, Eigen::MatrixXd::Constant(1, 1, 10.0), GCandidate::zeros(1, 1));
  CHECK(lam(0, 0) == 10.0);
}

TEST_CASE("dynamic recursion: A=0.5, B=1, g=(1,1)") {
  const DusSpec d = scalar_ar1(0.5, 1.0);
  const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(1, 2, 20.0);
  const Eigen::MatrixXd lam = realize(d, fc, make_g({{1, 1}}));
  CHECK(lam(0, 0) == doctest::Approx(21.0).epsilon(1e-12));
  CHECK(lam(0, 1) == doctest::Approx(21.5).epsilon(1e-12));
}

TEST_CASE("dynamic recursion with zero drivers and seeds returns the forecast") {
  std::mt19937_64 rng(5);
  DusSpec d = random_dus(rng, 3, 2, 2);
  d.seed_residuals.setZero();
  const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(3, 4, 7.0);
  CHECK((realize(d, fc, GCandidate::zeros(3, 4)) - fc).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("realize rejects budget violations and shape mismatches") {
  SusSpec s{Eigen::MatrixXd::Constant(2, 1, 2.0), 1};
  CHECK_THROWS_AS(realize(s, Eigen::MatrixXd::Constant(2, 1, 10.0), make_g({{1}, {1}})), BudgetError);
  CHECK_THROWS_AS(realize(s, Eigen::MatrixXd::Constant(3, 1, 10.0), make_g({{1}, {0}})), std::invalid_argument);
}

TEST_CASE("clipping replaces negative demand with zero only when enabled") {
  UncertaintySpec spec;
  spec.set = SusSpec{Eigen::MatrixXd::Constant(1, 1, 5.0), 1};
  const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(1, 1, 2.0);
  CHECK(realize(spec, fc, make_g({{-1}}))(0, 0) == -3.0);
  spec.clip = true;
  CHECK(realize(spec, fc, make_g({{-1}}))(0, 0) == 0.0);
}

TEST_CASE("scalar AR(1) impulse response is a geometric sequence") {
  const AffineDemandMap m = unroll_affine(scalar_ar1(0.5, 1.0), Eigen::MatrixXd::Constant(1, 5, 3.0));
  for (int t = 0; t < 5; ++t)
    for (int tau = 0; tau < 5; ++tau) {
      const double expect = tau <= t ? std::pow(0.5, t - tau) : 0.0;
      CHECK(m.coef(0, t, 0, tau) == doctest::Approx(expect).epsilon(1e-14));
    }
}

TEST_CASE("memoryless dynamic set reduces to a per-period map") {
  std::mt19937_64 rng(9);
  DusSpec d = random_dus(rng, 3, 1, 2);
  d.ar.setZero();
  const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(3, 3, 50.0);
  const AffineDemandMap m = unroll_affine(d, fc);
  CHECK((m.offset - fc).cwiseAbs().maxCoeff() == 0.0);
  for (int t = 0; t < 3; ++t)
    for (int tau = 0; tau < 3; ++tau)
      for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
          CHECK(m.coef(i, t, k, tau) == (tau == t ? d.mixing(i, k) : 0.0));
}

TEST_CASE("affine map reproduces realize on every candidate and is causal") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 5; ++rep) {
    const DusSpec d = random_dus(rng, 2, 2, 2);
    const Eigen::MatrixXd fc = Eigen::MatrixXd::NullaryExpr(2, 3, [&] { return 40.0 + (rng() % 20); });
    const AffineDemandMap m = unroll_affine(d, fc);
    for (const auto& g : enumerate_candidates(2, 3, 2))
      CHECK((m.apply(g) - realize(d, fc, g)).cwiseAbs().maxCoeff() <= 1e-9);
    for (int t = 0; t < 3; ++t)
      for (int tau = t + 1; tau < 3; ++tau)
        for (int i = 0; i < 2; ++i)
          for (int k = 0; k < 2; ++k) CHECK(m.coef(i, t, k, tau) == 0.0);
  }
}

TEST_CASE("candidate enumeration counts") {
  CHECK(enumerate_candidates(2, 1, 1).size() == 5);
  CHECK(enumerate_candidates(2, 1, 2).size() == 9);
  CHECK(enumerate_candidates(1, 2, 1).size() == 9);
  CHECK(candidate_count(2, 2, 1) == 25);
  CHECK(candidate_count(3, 2, 1) == 49);
  CHECK(candidate_count(20, 24, 5) == UINT64_MAX);
  std::set<std::vector<int>> seen;
  for (const auto& g : enumerate_candidates(3, 2, 2)) {
    CHECK(g.within_budget(2));
    seen.insert(std::vector<int>(g.g.data(), g.g.data() + g.g.size()));
  }
  CHECK(seen.size() == candidate_count(3, 2, 2));
}

TEST_CASE("enumeration yields exactly the budgeted vertex set") {
  const auto five = enumerate_candidates(2, 1, 1);
  std::set<std::pair<int, int>> got;
  for (const auto& g : five) got.insert({g.g(0, 0), g.g(1, 0)});
  const std::set<std::pair<int, int>> expect{{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  CHECK(got == expect);
}

TEST_CASE("enumeration refuses beyond the cap and rejects bad budgets") {
  CHECK_THROWS_AS(enumerate_candidates(5, 4, 2, 1000), CapExceeded);
  CHECK_THROWS_AS(enumerate_candidates(2, 1, 3), BudgetError);
}

TEST_CASE("budget inclusion: small-budget candidates are large-budget candidates") {
  const auto small = enumerate_candidates(3, 2, 1);
  for (const auto& g : small) CHECK(g.within_budget(2));
}

TEST_CASE("realize is monotone in g when all coefficients are nonnegative") {
  DusSpec d;
  d.lag = 1;
  d.ar = (Eigen::MatrixXd(2, 1) << 0.5, 0.3).finished();
  d.mixing = (Eigen::MatrixXd(2, 2) << 4.0, 0.0, 1.0, 2.0).finished();
  d.seed_residuals = Eigen::MatrixXd::Zero(2, 1);
  d.budget = 2;
  const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(2, 2, 10.0);
  const auto all = enumerate_candidates(2, 2, 2);
  for (const auto& a : all)
    for (const auto& b : all) {
      if (!((a.g.array() <= b.g.array()).all())) continue;
      CHECK(((realize(d, fc, a).array() <= realize(d, fc, b).array() + 1e-12)).all());
    }
}

TEST_CASE("extreme scenario, static set") {
  UncertaintySpec spec;
  spec.set = SusSpec{(Eigen::MatrixXd(2, 1) << 2.0, 5.0).finished(), 1};
  const Eigen::MatrixXd fc = (Eigen::MatrixXd(2, 1) << 10.0, 8.0).finished();
  const auto [g, lam] = extreme_total_demand(spec, fc, {});
  CHECK(g.g(0, 0) == 0);
  CHECK(g.g(1, 0) == 1);
  CHECK(lam.sum() == doctest::Approx(23.0));

  std::get<SusSpec>(spec.set).budget = 0;
  const auto [g0, lam0] = extreme_total_demand(spec, fc, {});
  CHECK(g0.g.cwiseAbs().sum() == 0);
  CHECK(lam0.sum() == doctest::Approx(18.0));
}

TEST_CASE("extreme scenario, scalar AR(1) picks all +1") {
  UncertaintySpec spec;
  spec.set = scalar_ar1(0.5, 2.0, 0.0, 1);
  const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(1, 2, 10.0);
  const auto [g, lam] = extreme_total_demand(spec, fc, {});
  CHECK(g.g(0, 0) == 1);
  CHECK(g.g(0, 1) == 1);
  double best = -1e300;
  for (const auto& c : enumerate_candidates(1, 2, 1)) best = std::max(best, realize(spec, fc, c).sum());
  CHECK(lam.sum() == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("extreme scenario matches enumeration on random dynamic sets") {
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 5; ++rep) {
    UncertaintySpec spec;
    spec.set = random_dus(rng, 2, 1, 1);
    const Eigen::MatrixXd fc = Eigen::MatrixXd::Constant(2, 3, 30.0);
    const auto [g, lam] = extreme_total_demand(spec, fc, {});
    double best = -1e300;
    for (const auto& c : enumerate_candidates(2, 3, 1)) best = std::max(best, realize(spec, fc, c).sum());
    CHECK(lam.sum() == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("seasonal fit is exact on noiseless data") {
  const int n = 300;
  Eigen::MatrixXd phi(1, kSeasonalTerms);
  phi << 5.0, 1.0, 0.0, 0.0, 0.0;
  Eigen::MatrixXd values(n, 1);
  for (int k = 0; k < n; ++k) values(k, 0) = (phi * seasonal_basis(k, {}).transpose())(0);
  const SeasonalFit f = fit_seasonal(values);
  CHECK((f.phi - phi).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("seasonal fit of a constant trace") {
  const SeasonalFit f = fit_seasonal(Eigen::MatrixXd::Constant(144, 1, 7.0));
  CHECK(f.phi(0, 0) == doctest::Approx(7.0).epsilon(1e-10));
  for (int k = 1; k < kSeasonalTerms; ++k) CHECK(std::abs(f.phi(0, k)) <= 1e-9);
}

TEST_CASE("seasonal fit under noise stays within 5 percent") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.1);
  Eigen::MatrixXd phi(1, kSeasonalTerms);
  phi << 5.0, 1.0, -0.8, 0.5, 0.4;
  Eigen::MatrixXd values(2000, 1);
  for (int k = 0; k < 2000; ++k) values(k, 0) = (phi * seasonal_basis(k, {}).transpose())(0) + noise(rng);
  const SeasonalFit f = fit_seasonal(values);
  for (int k = 0; k < kSeasonalTerms; ++k)
    CHECK(std::abs(f.phi(0, k) - phi(0, k)) <= 0.05 * std::abs(phi(0, k)));
}

TEST_CASE("seasonal fit needs two primary cycles") {
  CHECK_THROWS_AS(fit_seasonal(Eigen::MatrixXd::Constant(100, 1, 1.0)), std::invalid_argument);
}

TEST_CASE("AR fit on an exact geometric sequence") {
  Eigen::MatrixXd r(20, 1);
  for (int k = 0; k < 20; ++k) r(k, 0) = std::pow(0.5, k);
  const ARFit f = fit_ar(r, 1);
  CHECK(f.ar(0, 0) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(f.seed(0, 0) == doctest::Approx(std::pow(0.5, 19)).epsilon(1e-12));
}

TEST_CASE("AR fit recovers a synthetic AR(1)") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd r(2000, 1);
  double prev = 0.0;
  for (int k = 0; k < 2000; ++k) r(k, 0) = prev = 0.6 * prev + g(rng);
  const ARFit f = fit_ar(r, 1);
  CHECK(f.ar(0, 0) >= 0.55);
  CHECK(f.ar(0, 0) <= 0.65);
}

TEST_CASE("independent innovations give a diagonal mixing factor") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd r(4000, 2);
  double p0 = 0.0, p1 = 0.0;
  for (int k = 0; k < 4000; ++k) {
    r(k, 0) = p0 = 0.3 * p0 + 2.0 * g(rng);
    r(k, 1) = p1 = 0.3 * p1 + 1.0 * g(rng);
  }
  const ARFit f = fit_ar(r, 1);
  CHECK(std::abs(f.mixing(0, 0) - 2.0) <= 0.1);
  CHECK(std::abs(f.mixing(1, 1) - 1.0) <= 0.1);
  CHECK(std::abs(f.mixing(1, 0)) <= 0.1);
  CHECK(f.mixing(0, 1) == 0.0);
  CHECK(((f.mixing * f.mixing.transpose()) - f.sigma).norm() <= 1e-8);
  CHECK((f.sigma - f.sigma.transpose()).norm() == 0.0);
}

TEST_CASE("AR fit rejects short or non-finite series") {
  CHECK_THROWS_AS(fit_ar(Eigen::MatrixXd::Ones(15, 2), 1), std::invalid_argument);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Ones(40, 1);
  bad(3, 0) = std::nan("");
  CHECK_THROWS_AS(fit_ar(bad, 1), std::invalid_argument);
}

TEST_CASE("AR fit JSON round-trips") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd r = Eigen::MatrixXd::NullaryExpr(200, 2, [&] { return g(rng); });
  ARFit f = fit_ar(r, 2);
  f.phi = Eigen::MatrixXd::Ones(2, kSeasonalTerms);
  const ARFit back = ar_fit_from_json(ar_fit_to_json(f));
  CHECK(back.lag == 2);
  CHECK((back.ar - f.ar).norm() == 0.0);
  CHECK((back.mixing - f.mixing).norm() == 0.0);
  CHECK((back.sigma - f.sigma).norm() == 0.0);
  CHECK((back.seed - f.seed).norm() == 0.0);
  CHECK((back.phi - f.phi).norm() == 0.0);
}

TEST_CASE("estimation on simulated data recovers the AR coefficient") {
  ARFit truth;
  truth.lag = 1;
  truth.ar = Eigen::MatrixXd::Constant(1, 1, 0.5);
  truth.mixing = Eigen::MatrixXd::Constant(1, 1, 0.1);
  truth.seed = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd phi(1, kSeasonalTerms);
  phi << 5.0, 1.0, 0.0, 0.0, 0.0;
  const DemandTraces tr = gen_demand_traces(1, 2000, phi, truth, 99);
  const SeasonalFit sf = fit_seasonal(tr.values);
  const ARFit f = fit_ar(sf.residuals, 1);
  CHECK(std::abs(f.ar(0, 0) - 0.5) <= 0.05);
}

TEST_CASE("candidate digest is stable and distinguishes candidates") {
  const GCandidate a = make_g({{1, 0}, {0, -1}});
  const GCandidate b = make_g({{1, 0}, {0, 1}});
  CHECK(a.digest() == make_g({{1, 0}, {0, -1}}).digest());
  CHECK(a.digest() != b.digest());
  CHECK(a.digest().size() == 16);
}
