#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include "edgeplan/instance.hpp"
#include "edgeplan/scenario_gen.hpp"
#include "fixtures.hpp"

using namespace edgeplan;
using edgeplan::testing::blank_instance;
using edgeplan::testing::tiny_instance;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

// 1 AP, 1 EN, 1 period plan that serves 10 requests at the edge.
struct OneByOne {
  Instance inst = blank_instance();
  FirstStage fs = FirstStage::zeros(1, 1);
  RecoursePlan rp = RecoursePlan::zeros(1, 1, 1);
  Eigen::MatrixXd demand = Eigen::MatrixXd::Constant(1, 1, 10.0);

  OneByOne() {
    inst.costs.resource_per_request = 0.5;
    fs.edge(0, 0) = 4.0;
    rp.placement(0, 0) = 1.0;
    rp.startup(0, 0) = 1.0;
    rp.download_cloud(0, 0) = 1.0;
    rp.alloc_edge[0](0, 0) = 10.0;
    rp.buy_edge(0, 0) = 1.0;  // 4 + 1 = 5 = 0.5 * 10
  }
};

}  // namespace

TEST_CASE("smallest legal instance loads with 1x1 matrices") {
  const Instance inst = blank_instance();
  const Instance back = parse_instance(serialize_instance(inst));
  CHECK(back.aps() == 1);
  CHECK(back.ens() == 1);
  CHECK(back.horizon == 1);
  CHECK(back.forecast.rows() == 1);
  CHECK(back.forecast.cols() == 1);
  CHECK(back.costs.reserve_price_edge.size() == 1);
  CHECK(back.topology.delay_edge.size() == 1);
}

TEST_CASE("sell price above reserve price is rejected by the price-ordering rule") {
  Instance inst = blank_instance();
  inst.costs.sell_price_edge(0, 0) = 0.2;
  inst.costs.reserve_price_edge(0, 0) = 0.1;
  inst.costs.buy_price_edge(0, 0) = 0.3;
  const auto problems = check_instance(inst);
  REQUIRE_FALSE(problems.empty());
  CHECK(mentions(problems, "price ordering"));
  CHECK_THROWS_AS(parse_instance(serialize_instance(inst)), ValidationError);
}

TEST_CASE("instance validation lists every violated invariant") {
  Instance inst = blank_instance(2, 1, 1);
  inst.topology.delay_edge(1, 0) = 0.0;
  inst.topology.hops_cloud(0) = 0.0;
  inst.costs.capacity(0) = 0.0;
  inst.forecast(0, 0) = -1.0;
  const auto problems = check_instance(inst);
  CHECK(problems.size() >= 4);
  try {
    validate_instance(inst);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.violations() == problems);
  }
}

TEST_CASE("malformed instance text is a parse error") {
  CHECK_THROWS_AS(parse_instance("{ not json"), ParseError);
  CHECK_THROWS_AS(parse_instance("{}"), ParseError);
}

TEST_CASE("instance file with simulation-scale dimensions loads") {
  TopologyOptions topo;
  topo.aps = 20;
  topo.ens = 10;
  Instance inst;
  inst.topology = gen_topology(topo);
  inst.costs = gen_costs(20, 10, 24, 5);
  inst.horizon = 24;
  inst.forecast = Eigen::MatrixXd::Constant(20, 24, 100.0);
  inst.uncertainty.set = SusSpec{Eigen::MatrixXd::Constant(20, 24, 20.0), 5};
  const auto path = std::filesystem::temp_directory_path() / "edgeplan_scale_instance.json";
  save_instance(inst, path);
  const Instance back = load_instance(path);
  std::filesystem::remove(path);
  CHECK(back.aps() == 20);
  CHECK(back.ens() == 10);
  CHECK(back.uncertainty.budget() == 5);
  CHECK(back.costs.delay_penalty == doctest::Approx(0.0001));
  CHECK(back.costs.bandwidth_unit == doctest::Approx(0.02));
  CHECK(back.costs.request_size == doctest::Approx(0.02));
  CHECK(back.costs.resource_per_request == doctest::Approx(0.02));
}

TEST_CASE("serialization round-trips to an identical document") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance inst = tiny_instance(seed, {3, 2, 2, 1, seed % 2 == 0});
    const std::string text = serialize_instance(inst);
    CHECK(serialize_instance(parse_instance(text)) == text);
  }
}

TEST_CASE("cost breakdown of an all-zero plan is zero") {
  const Instance inst = tiny_instance(3);
  const CostBreakdown b =
      cost_breakdown(inst, FirstStage::zeros(inst.ens(), inst.horizon), RecoursePlan::zeros(inst.aps(), inst.ens(), inst.horizon));
  CHECK(b.total == 0.0);
  CHECK(b.reserve == 0.0);
  CHECK(b.adjust == 0.0);
  CHECK(b.install == 0.0);
  CHECK(b.download == 0.0);
  CHECK(b.storage == 0.0);
  CHECK(b.delay == 0.0);
  CHECK(b.bandwidth == 0.0);
}

TEST_CASE("single reservation term") {
  Instance inst = blank_instance();
  inst.costs.reserve_price_edge(0, 0) = 0.1;
  inst.costs.buy_price_edge(0, 0) = 0.1;
  FirstStage fs = FirstStage::zeros(1, 1);
  fs.edge(0, 0) = 10.0;
  const CostBreakdown b = cost_breakdown(inst, fs, RecoursePlan::zeros(1, 1, 1));
  CHECK(b.reserve == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b.total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("adjustment term nets buy against sell") {
  Instance inst = blank_instance();
  inst.costs.buy_price_edge(0, 0) = 0.2;
  inst.costs.reserve_price_edge(0, 0) = 0.1;
  inst.costs.sell_price_edge(0, 0) = 0.05;
  RecoursePlan rp = RecoursePlan::zeros(1, 1, 1);
  rp.buy_edge(0, 0) = 5.0;
  rp.sell_edge(0, 0) = 2.0;
  const CostBreakdown b = cost_breakdown(inst, FirstStage::zeros(1, 1), rp);
  CHECK(b.adjust == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("total equals the sum of the seven components") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 5.0);
  const Instance inst = tiny_instance(4, {2, 2, 2, 1, true});
  for (int rep = 0; rep < 20; ++rep) {
    FirstStage fs = FirstStage::zeros(2, 2);
    RecoursePlan rp = RecoursePlan::zeros(2, 2, 2);
    fs.edge = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
    fs.cloud = Eigen::VectorXd::NullaryExpr(2, [&] { return U(rng); });
    rp.placement.setOnes();
    rp.startup(0, 0) = 1.0;
    rp.buy_edge = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
    rp.sell_edge = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
    rp.alloc_cloud = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
    for (auto& m : rp.alloc_edge) m = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
    const CostBreakdown b = cost_breakdown(inst, fs, rp);
    CHECK(std::abs(b.total - (b.reserve + b.adjust + b.install + b.download + b.storage + b.delay + b.bandwidth)) <=
          1e-9);
  }
}

TEST_CASE("breakdown is linear in the continuous fields at fixed binaries") {
  const Instance inst = tiny_instance(8, {2, 2, 2, 1, true});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 3.0);
  FirstStage fs = FirstStage::zeros(2, 2);
  RecoursePlan rp = RecoursePlan::zeros(2, 2, 2);
  fs.edge = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
  fs.cloud = Eigen::VectorXd::NullaryExpr(2, [&] { return U(rng); });
  rp.buy_edge = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
  rp.sell_edge = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
  rp.buy_cloud = Eigen::VectorXd::NullaryExpr(2, [&] { return U(rng); });
  rp.alloc_cloud = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
  for (auto& m : rp.alloc_edge) m = Eigen::MatrixXd::NullaryExpr(2, 2, [&] { return U(rng); });
  const CostBreakdown b1 = cost_breakdown(inst, fs, rp);
  const double k = 2.5;
  FirstStage fs2 = fs;
  RecoursePlan rp2 = rp;
  fs2.edge *= k;
  fs2.cloud *= k;
  rp2.buy_edge *= k;
  rp2.sell_edge *= k;
  rp2.buy_cloud *= k;
  rp2.alloc_cloud *= k;
  for (auto& m : rp2.alloc_edge) m *= k;
  const CostBreakdown b2 = cost_breakdown(inst, fs2, rp2);
  CHECK(b2.reserve == doctest::Approx(k * b1.reserve).epsilon(1e-12));
  CHECK(b2.adjust == doctest::Approx(k * b1.adjust).epsilon(1e-12));
  CHECK(b2.delay == doctest::Approx(k * b1.delay).epsilon(1e-12));
  CHECK(b2.bandwidth == doctest::Approx(k * b1.bandwidth).epsilon(1e-12));
}

TEST_CASE("hand-built feasible plan passes validation") {
  OneByOne c;
  CHECK(validate_recourse(c.inst, c.fs, c.rp, c.demand).empty());
}

TEST_CASE("selling more than the reservation is flagged") {
  OneByOne c;
  c.rp.sell_edge(0, 0) = c.fs.edge(0, 0) + 1.0;
  c.rp.buy_edge(0, 0) = 1.0 + c.rp.sell_edge(0, 0);
  CHECK(mentions(validate_recourse(c.inst, c.fs, c.rp, c.demand), "sell_back"));
}

TEST_CASE("resources at an unplaced edge node violate the capacity coupling") {
  OneByOne c;
  c.rp.placement(0, 0) = 0.0;
  c.rp.startup(0, 0) = 0.0;
  c.rp.download_cloud(0, 0) = 0.0;
  CHECK(mentions(validate_recourse(c.inst, c.fs, c.rp, c.demand), "capacity_coupling"));
}

TEST_CASE("validation names coverage, balance and download rules") {
  OneByOne c;
  c.rp.alloc_edge[0](0, 0) = 9.0;
  CHECK(mentions(validate_recourse(c.inst, c.fs, c.rp, c.demand), "demand_coverage"));
  OneByOne d;
  d.rp.buy_edge(0, 0) = 0.0;
  CHECK(mentions(validate_recourse(d.inst, d.fs, d.rp, d.demand), "edge_balance"));
  OneByOne e;
  e.rp.download_cloud(0, 0) = 0.0;
  CHECK(mentions(validate_recourse(e.inst, e.fs, e.rp, e.demand), "download_required"));
  OneByOne f;
  f.rp.startup(0, 0) = 0.0;
  CHECK(mentions(validate_recourse(f.inst, f.fs, f.rp, f.demand), "startup"));
  OneByOne g;
  g.rp.alloc_cloud(0, 0) = 1.0;
  CHECK(mentions(validate_recourse(g.inst, g.fs, g.rp, g.demand), "cloud_balance"));
}

TEST_CASE("tightening startup to the placement rise never raises installation cost") {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.5);
  const Instance inst = tiny_instance(6, {1, 2, 2, 1, true});
  for (int rep = 0; rep < 50; ++rep) {
    RecoursePlan rp = RecoursePlan::zeros(1, 2, 2);
    for (int j = 0; j < 2; ++j)
      for (int t = 0; t < 2; ++t) {
        rp.placement(j, t) = coin(rng) ? 1.0 : 0.0;
        const double prev = t == 0 ? inst.costs.initial_placement[j] : rp.placement(j, t - 1);
        rp.startup(j, t) = std::max(0.0, rp.placement(j, t) - prev) > 0 || coin(rng) ? 1.0 : 0.0;
      }
    RecoursePlan tight = rp;
    for (int j = 0; j < 2; ++j)
      for (int t = 0; t < 2; ++t) {
        const double prev = t == 0 ? inst.costs.initial_placement[j] : rp.placement(j, t - 1);
        tight.startup(j, t) = std::max(0.0, rp.placement(j, t) - prev);
      }
    const FirstStage fs = FirstStage::zeros(2, 2);
    CHECK(cost_breakdown(inst, fs, tight).install <= cost_breakdown(inst, fs, rp).install + 1e-12);
  }
}

TEST_CASE("trace CSV round-trips") {
  DemandTraces tr;
  tr.periods = {0, 1, 2};
  tr.values.resize(3, 2);
  tr.values << 1.5, 2.25, 0.1, 1e-7, 300.0, 4.0;
  const DemandTraces back = parse_traces_csv(format_traces_csv(tr));
  CHECK(back.periods == tr.periods);
  CHECK(back.values == tr.values);
  CHECK_THROWS_AS(parse_traces_csv("time,area_1\n0,1\n"), ParseError);
  CHECK_THROWS_AS(parse_traces_csv("period,area_1\n0,abc\n"), ParseError);
}

TEST_CASE("mismatched plan dimensions are rejected") {
  const Instance inst = blank_instance(2, 1, 1);
  CHECK_THROWS_AS(cost_breakdown(inst, FirstStage::zeros(1, 1), RecoursePlan::zeros(1, 1, 1)), DimensionError);
}
