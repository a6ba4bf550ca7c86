#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "edgeplan/models.hpp"
#include "edgeplan/rod.hpp"
#include "edgeplan/solver.hpp"
#include "edgeplan/uncertainty.hpp"
#include "fixtures.hpp"

using namespace edgeplan;
using edgeplan::testing::blank_instance;
using edgeplan::testing::tiny_instance;

namespace {

// Edge delay 5 ms, cloud delay 30 ms at 1 $/ms: the cloud is prohibitive.
Instance edge_favoured() {
  Instance inst = blank_instance();
  auto& c = inst.costs;
  c.delay_penalty = 1.0;
  c.resource_per_request = 0.1;
  c.reserve_price_edge(0, 0) = 0.1;
  c.buy_price_edge(0, 0) = 0.2;
  c.reserve_price_cloud(0) = 0.1;
  c.buy_price_cloud(0) = 0.2;
  c.install_cost(0, 0) = 1.0;
  c.storage_cost(0, 0) = 0.5;
  c.download_cloud(0, 0) = 0.3;
  inst.forecast(0, 0) = 10.0;
  return inst;
}

BinaryPoint all_placed(const Instance& inst) {
  const int J = inst.ens(), T = inst.horizon;
  BinaryPoint b;
  b.placement = Eigen::MatrixXd::Ones(J, T);
  b.startup = Eigen::MatrixXd::Zero(J, T);
  b.download_cloud = Eigen::MatrixXd::Zero(J, T);
  b.download_en.assign(static_cast<std::size_t>(J), Eigen::MatrixXd::Zero(J, T));
  for (int j = 0; j < J; ++j)
    if (inst.costs.initial_placement[static_cast<std::size_t>(j)] == 0) {
      b.startup(j, 0) = 1.0;
      b.download_cloud(j, 0) = 1.0;
    }
  return b;
}

BinaryPoint none_placed(const Instance& inst) {
  const int J = inst.ens(), T = inst.horizon;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(J, T);
  return {zero, std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(J), zero), zero, zero};
}

double solve_value(const LinearModel& m) {
  const SolveResult r = solve(m);
  REQUIRE(r.optimal());
  return r.objective;
}

}  // namespace

TEST_CASE("deterministic model with zero demand costs nothing") {
  const Instance inst = tiny_instance(1, {2, 2, 2, 1, true});
  const BuiltModel bm = build_det(inst, Eigen::MatrixXd::Zero(2, 2));
  const SolveResult r = solve(bm.model);
  REQUIRE(r.optimal());
  CHECK(std::abs(r.objective) <= 1e-12);
  for (double v : r.values) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("deterministic model places the service when the cloud is prohibitive") {
  const Instance inst = edge_favoured();
  const BuiltModel bm = build_det(inst, inst.forecast);
  const SolveResult r = solve(bm.model);
  REQUIRE(r.optimal());
  const FirstStage fs = extract_first_stage(inst, bm.map, r);
  const RecoursePlan rp = extract_recourse(inst, bm.map, r);
  CHECK(rp.placement(0, 0) == 1.0);
  CHECK(rp.alloc_edge[0](0, 0) == doctest::Approx(10.0));
  CHECK(rp.alloc_cloud(0, 0) == doctest::Approx(0.0));
  // reserve 0.1 * 1 vCPU, install 1, storage 0.5, download 0.3, delay 5 * 10
  const CostBreakdown b = cost_breakdown(inst, fs, rp);
  CHECK(b.reserve == doctest::Approx(0.1));
  CHECK(b.install == doctest::Approx(1.0));
  CHECK(b.storage == doctest::Approx(0.5));
  CHECK(b.download == doctest::Approx(0.3));
  CHECK(b.delay == doctest::Approx(50.0));
  CHECK(r.objective == doctest::Approx(51.9).epsilon(1e-9));
  CHECK(b.total == doctest::Approx(r.objective).epsilon(1e-9));
  CHECK(validate_recourse(inst, fs, rp, inst.forecast).empty());
}

TEST_CASE("deterministic model variable count for two areas, one node, one period") {
  const Instance inst = blank_instance(2, 1, 1);
  const BuiltModel bm = build_det(inst, inst.forecast);
  CHECK(bm.model.num_variables() == 13);
  CHECK(bm.map.size() == 13);
}

TEST_CASE("innermost LP sells back the whole reservation at zero demand") {
  Instance inst = blank_instance();
  inst.costs.sell_price_edge(0, 0) = 0.05;
  inst.costs.reserve_price_edge(0, 0) = 0.1;
  inst.costs.buy_price_edge(0, 0) = 0.2;
  inst.costs.sell_price_cloud(0) = 0.02;
  inst.costs.reserve_price_cloud(0) = 0.06;
  inst.costs.buy_price_cloud(0) = 0.1;
  FirstStage fs = FirstStage::zeros(1, 1);
  fs.edge(0, 0) = 4.0;
  fs.cloud(0) = 3.0;
  const BinaryPoint bin = all_placed(inst);
  const double fixed = bin.fixed_cost(inst);
  const BuiltModel lp = build_innermost_lp(inst, fs, bin, Eigen::MatrixXd::Zero(1, 1));
  CHECK_FALSE(lp.model.has_integers());
  CHECK(solve_value(lp.model) == doctest::Approx(fixed - 0.05 * 4.0 - 0.02 * 3.0).epsilon(1e-12));
}

TEST_CASE("innermost LP routes everything to the cloud when nothing is placed") {
  Instance inst = tiny_instance(3, {2, 1, 1, 0, false});
  FirstStage fs = FirstStage::zeros(1, 1);
  fs.edge(0, 0) = 0.5;
  fs.cloud(0) = 0.7;
  const BuiltModel lp = build_innermost_lp(inst, fs, none_placed(inst), inst.forecast);
  const auto& c = inst.costs;
  const double w = c.resource_per_request, d = c.slot_length;
  double expect = 0.0;
  double need = 0.0;
  for (int i = 0; i < 2; ++i) {
    expect += inst.cloud_unit_cost(i) * inst.forecast(i, 0);
    need += w * inst.forecast(i, 0);
  }
  // The unplaced edge reservation must be sold; the cloud buys its shortfall.
  expect -= d * c.sell_price_edge(0, 0) * 0.5;
  expect += d * c.buy_price_cloud(0) * std::max(0.0, need - 0.7);
  expect -= d * c.sell_price_cloud(0) * std::max(0.0, 0.7 - need);
  CHECK(solve_value(lp.model) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("innermost LP is always feasible thanks to the cloud") {
  std::mt19937_64 rng(4);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance inst = tiny_instance(seed, {3, 2, 2, 1, true});
    const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
    const Eigen::MatrixXd big = inst.forecast * 10.0;
    for (const BinaryPoint& bin : {none_placed(inst), all_placed(inst)}) {
      const SolveResult r = solve(build_innermost_lp(inst, fs, bin, big).model);
      CHECK(r.optimal());
    }
  }
}

TEST_CASE("outer master with the forecast alone equals the deterministic model") {
  const Instance inst = tiny_instance(5, {2, 2, 2, 0, false});
  const double det = solve_value(build_det(inst, inst.forecast).model);
  CHECK(solve_value(build_outer_mp(inst, {inst.forecast}).model) == doctest::Approx(det).epsilon(1e-9));
  CHECK(solve_value(build_outer_mp(inst, {inst.forecast, inst.forecast}).model) ==
        doctest::Approx(det).epsilon(1e-9));
}

TEST_CASE("outer master epigraph equals the worst re-solved recourse at its reservation") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = tiny_instance(seed, {1, 1, 1, 1, false});
    const Eigen::MatrixXd a = inst.forecast * 0.5;
    const Eigen::MatrixXd b = inst.forecast * 1.5;
    const BuiltModel bm = build_outer_mp(inst, {a, b});
    SolverParams p;
    const SolveResult r = solve(bm.model, p);
    REQUIRE(r.optimal());
    const FirstStage fs = extract_first_stage(inst, bm.map, r);
    const double eta = r.values[bm.map.var({"eta"})];
    const double qa = solve_recourse(inst, fs, a, {}, p).value;
    const double qb = solve_recourse(inst, fs, b, {}, p).value;
    CHECK(eta == doctest::Approx(std::max(qa, qb)).epsilon(1e-7));
  }
}

TEST_CASE("recourse at zero demand and zero sell price is zero") {
  Instance inst = blank_instance();
  FirstStage fs = FirstStage::zeros(1, 1);
  fs.edge(0, 0) = 2.0;
  CHECK(solve_recourse(inst, fs, Eigen::MatrixXd::Zero(1, 1), {}, {}).value == doctest::Approx(0.0));
}

TEST_CASE("recourse at zero demand sells every reserved unit") {
  Instance inst = blank_instance();
  inst.costs.slot_length = 1.0 / 3.0;
  inst.costs.sell_price_edge(0, 0) = 0.02;
  inst.costs.reserve_price_edge(0, 0) = 0.1;
  inst.costs.buy_price_edge(0, 0) = 0.12;
  FirstStage fs = FirstStage::zeros(1, 1);
  fs.edge(0, 0) = 6.0;
  const RecourseSolution rec = solve_recourse(inst, fs, Eigen::MatrixXd::Zero(1, 1), {}, {});
  CHECK(rec.value == doctest::Approx(-(1.0 / 3.0) * 0.02 * 6.0).epsilon(1e-12));
  CHECK(rec.plan.sell_edge(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("recourse MILP matches brute force over the placement binaries") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const Instance inst = edge_favoured();
    Instance heavy = inst;
    heavy.forecast(0, 0) = 10.0 * static_cast<double>(seed);
    FirstStage fs = FirstStage::zeros(1, 1);
    fs.edge(0, 0) = 0.3 * static_cast<double>(seed);
    const double milp = solve_recourse(heavy, fs, heavy.forecast, {}, {}).value;
    const double brute = std::min(solve_value(build_innermost_lp(heavy, fs, none_placed(heavy), heavy.forecast).model),
                                  solve_value(build_innermost_lp(heavy, fs, all_placed(heavy), heavy.forecast).model));
    CHECK(milp == doctest::Approx(brute).epsilon(1e-9));
    const RecourseSolution rec = solve_recourse(heavy, fs, heavy.forecast, {}, {});
    CHECK(rec.binaries.placement(0, 0) == 1.0);
  }
}

TEST_CASE("recourse plans are feasible and priced consistently") {
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Instance inst = tiny_instance(seed, {3, 2, 2, 1, true});
    const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
    const RecourseSolution rec = solve_recourse(inst, fs, inst.forecast, {}, {});
    CHECK(validate_recourse(inst, fs, rec.plan, inst.forecast).empty());
    const CostBreakdown b = cost_breakdown(inst, fs, rec.plan);
    CHECK(b.total - b.reserve == doctest::Approx(rec.value).epsilon(1e-9));
  }
}

TEST_CASE("recourse never buys and sells at the same node and period") {
  std::mt19937_64 rng(13);
  for (std::uint64_t seed = 1; seed <= 15; ++seed) {
    const Instance inst = tiny_instance(seed, {3, 2, 2, 1, true});
    const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
    const RecoursePlan rp = solve_recourse(inst, fs, inst.forecast * 1.3, {}, {}).plan;
    for (int t = 0; t < inst.horizon; ++t) {
      for (int j = 0; j < inst.ens(); ++j) CHECK(std::min(rp.buy_edge(j, t), rp.sell_edge(j, t)) <= 1e-6);
      CHECK(std::min(rp.buy_cloud(t), rp.sell_cloud(t)) <= 1e-6);
    }
  }
}

TEST_CASE("worst-case master with one cut and no budget returns the forecast recourse") {
  const Instance inst = tiny_instance(7, {2, 1, 2, 0, true});
  std::mt19937_64 rng(7);
  const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
  const AffineDemandMap map = unroll_affine(inst.uncertainty, inst.forecast);
  const RecourseSolution rec = solve_recourse(inst, fs, map.offset, {}, {});
  const CutPoint cut = make_cut(inst, fs, rec.binaries, map.offset);
  const BuiltModel mp = build_inner_mp(inst, {cut}, map, 0, derive_demand_dual_bounds(inst));
  const SolveResult r = solve(mp.model);
  REQUIRE(r.optimal());
  CHECK(r.objective == doctest::Approx(rec.value).epsilon(1e-9));
  CHECK(extract_candidate(mp.map, r, 2, 2).g.cwiseAbs().sum() == 0);
}

TEST_CASE("worst-case master over a memoryless set matches enumeration") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = tiny_instance(seed, {2, 1, 1, 1, false});
    std::mt19937_64 rng(seed);
    const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
    const AffineDemandMap map = unroll_affine(inst.uncertainty, inst.forecast);
    const BinaryPoint bin = solve_recourse(inst, fs, inst.forecast, {}, {}).binaries;
    const CutPoint cut = make_cut(inst, fs, bin, map.offset);
    const BuiltModel mp = build_inner_mp(inst, {cut}, map, 1, derive_demand_dual_bounds(inst));
    double brute = -kInf;
    for (const auto& g : enumerate_candidates(2, 1, 1))
      brute = std::max(brute, solve_value(build_innermost_lp(inst, fs, bin, map.apply(g)).model));
    CHECK(solve_value(mp.model) == doctest::Approx(brute).epsilon(1e-9));
  }
}

TEST_CASE("product linearization is exact at a fixed driver") {
  const Instance inst = tiny_instance(9, {1, 1, 1, 1, false});
  std::mt19937_64 rng(9);
  const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
  const AffineDemandMap map = unroll_affine(inst.uncertainty, inst.forecast);
  const BinaryPoint bin = solve_recourse(inst, fs, inst.forecast, {}, {}).binaries;
  BuiltModel mp = build_inner_mp(inst, {make_cut(inst, fs, bin, map.offset)}, map, 1, derive_demand_dual_bounds(inst));
  const int gp = mp.map.var({"gp", -1, 0, 0});
  const int gm = mp.map.var({"gm", -1, 0, 0});
  mp.model.set_bounds(gp, 1.0, 1.0);
  mp.model.set_bounds(gm, 0.0, 0.0);
  const SolveResult r = solve(mp.model);
  REQUIRE(r.optimal());
  // With the driver on, the product equals psi times the coverage dual.
  const double zeta = r.values[mp.map.var({"zeta_p", 0, 0, 0})];
  const double sigma = r.values[mp.map.var({"sigma", 0, 0, 0})];
  CHECK(zeta == doctest::Approx(map.coef(0, 0, 0, 0) * sigma).epsilon(1e-9));
  CHECK(std::abs(r.values[mp.map.var({"zeta_m", 0, 0, 0})]) <= 1e-9);
  GCandidate g = GCandidate::zeros(1, 1);
  g.g(0, 0) = 1;
  CHECK(r.objective == doctest::Approx(solve_value(build_innermost_lp(inst, fs, bin, map.apply(g)).model)).epsilon(1e-9));
}

TEST_CASE("coverage dual bounds are finite and nonnegative") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = tiny_instance(seed, {3, 2, 2, 1, true});
    const DemandDualBounds b = derive_demand_dual_bounds(inst);
    CHECK(b.upper.allFinite());
    CHECK(b.upper.minCoeff() >= 0.0);
  }
}

TEST_CASE("worst-case master refuses missing dual bounds") {
  const Instance inst = tiny_instance(2, {2, 1, 1, 1, false});
  const FirstStage fs = FirstStage::zeros(1, 1);
  const AffineDemandMap map = unroll_affine(inst.uncertainty, inst.forecast);
  const CutPoint cut = make_cut(inst, fs, none_placed(inst), map.offset);
  CHECK_THROWS_AS(build_inner_mp(inst, {cut}, map, 1, DemandDualBounds{}), ModelError);
  CHECK_THROWS_AS(build_inner_mp(inst, {}, map, 1, derive_demand_dual_bounds(inst)), ModelError);
}

TEST_CASE("extreme-scenario MILP") {
  UncertaintySpec spec;
  spec.set = SusSpec{(Eigen::MatrixXd(2, 1) << 2.0, 5.0).finished(), 0};
  const Eigen::MatrixXd fc = (Eigen::MatrixXd(2, 1) << 10.0, 8.0).finished();
  CHECK(solve_value(build_extreme_scenario(spec, fc).model) == doctest::Approx(18.0));
  std::get<SusSpec>(spec.set).budget = 1;
  CHECK(solve_value(build_extreme_scenario(spec, fc).model) == doctest::Approx(23.0));

  DusSpec d;
  d.lag = 1;
  d.ar = Eigen::MatrixXd::Constant(1, 1, 0.5);
  d.mixing = Eigen::MatrixXd::Constant(1, 1, 1.0);
  d.seed_residuals = Eigen::MatrixXd::Zero(1, 1);
  d.budget = 1;
  UncertaintySpec dyn;
  dyn.set = d;
  const BuiltModel bm = build_extreme_scenario(dyn, Eigen::MatrixXd::Constant(1, 2, 10.0));
  const SolveResult r = solve(bm.model);
  REQUIRE(r.optimal());
  const GCandidate g = extract_candidate(bm.map, r, 1, 2);
  CHECK(g.g(0, 0) == 1);
  CHECK(g.g(0, 1) == 1);
}

TEST_CASE("static baseline with no budget equals the time-constant deterministic model") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Instance inst = tiny_instance(seed, {2, 2, 2, 0, false});
    RodConfig cfg;
    const RodResult saro = solve_saro(inst, inst.uncertainty.sus(), cfg);
    cfg.model.time_constant = true;
    const RodResult det = solve_det(inst, cfg);
    CHECK(saro.objective == doctest::Approx(det.objective).epsilon(1e-7));
  }
}

TEST_CASE("static baseline with zero demand reserves nothing") {
  Instance inst = tiny_instance(3, {2, 1, 2, 1, false});
  inst.forecast.setZero();
  std::get<SusSpec>(inst.uncertainty.set).deviation.setZero();
  const RodResult r = solve_saro(inst, inst.uncertainty.sus(), RodConfig{});
  CHECK(std::abs(r.objective) <= 1e-9);
  REQUIRE(r.static_first_stage);
  CHECK(r.static_first_stage->edge.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(std::abs(r.static_first_stage->cloud) <= 1e-9);
}

TEST_CASE("static baseline costs at least the time-constant adaptive model") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    Instance inst = tiny_instance(seed, {1, 1, 2, 1, false});
    auto& dev = std::get<SusSpec>(inst.uncertainty.set).deviation;
    dev(0, 0) = 10.0;
    dev(0, 1) = 40.0;
    RodConfig cfg;
    cfg.outer_gap = 1e-6;
    cfg.inner_gap = 1e-6;
    const RodResult saro = solve_saro(inst, inst.uncertainty.sus(), cfg);
    cfg.model.time_constant = true;
    const RodResult daro = solve_rod(inst, inst.uncertainty, cfg);
    CHECK(saro.objective >= daro.objective * (1.0 - 1e-6) - 1e-9);
  }
}
