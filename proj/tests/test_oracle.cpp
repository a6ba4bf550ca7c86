#include <doctest.h>

#include <random>

#include "edgeplan/oracle.hpp"
#include "fixtures.hpp"

using namespace edgeplan;
using edgeplan::testing::tiny_instance;

TEST_CASE("no budget leaves one candidate, the forecast") {
  std::mt19937_64 rng(1);
  const Instance inst = tiny_instance(1, {2, 1, 2, 0, true});
  const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
  const ExactQ ex = exact_q(inst, fs, inst.uncertainty);
  CHECK(ex.candidates == 1);
  const double direct = solve_recourse(inst, fs, realize(inst.uncertainty, inst.forecast, ex.argmax), {}, {}).value;
  CHECK(ex.value == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("candidate count for two areas, two periods, budget two") {
  std::mt19937_64 rng(2);
  const Instance inst = tiny_instance(2, {2, 1, 2, 2, false});
  const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
  CHECK(exact_q(inst, fs, inst.uncertainty).candidates == 81);
}

TEST_CASE("worst case dominates every single scenario") {
  std::mt19937_64 rng(3);
  const Instance inst = tiny_instance(3, {2, 1, 2, 1, true});
  const FirstStage fs = edgeplan::testing::random_first_stage(inst, rng);
  const ExactQ ex = exact_q(inst, fs, inst.uncertainty);
  for (const auto& g : enumerate_candidates(2, 2, 1)) {
    const double q = solve_recourse(inst, fs, realize(inst.uncertainty, inst.forecast, g), {}, {}).value;
    CHECK(q <= ex.value + 1e-9);
  }
}

TEST_CASE("worst case is nondecreasing in the budget") {
  std::mt19937_64 rng(4);
  const Instance base = tiny_instance(4, {2, 1, 2, 0, true});
  const FirstStage fs = edgeplan::testing::random_first_stage(base, rng);
  double prev = -kInf;
  for (int budget = 0; budget <= 2; ++budget) {
    Instance inst = base;
    std::get<DusSpec>(inst.uncertainty.set).budget = budget;
    const double q = exact_q(inst, fs, inst.uncertainty).value;
    CHECK(q >= prev - 1e-9);
    prev = q;
  }
}

TEST_CASE("deterministic equivalent is consistent with its own first stage") {
  const Instance inst = tiny_instance(5, {2, 1, 2, 1, false});
  const ExactFull full = exact_full(inst, inst.uncertainty);
  CHECK(full.candidates == 25);
  const ExactQ ex = exact_q(inst, full.first_stage, inst.uncertainty);
  CHECK(full.first_stage_cost + ex.value == doctest::Approx(full.value).epsilon(1e-7));
  CHECK(full.first_stage_cost == doctest::Approx(reservation_cost(inst, full.first_stage)).epsilon(1e-12));
}

TEST_CASE("enumeration refuses to exceed the cap") {
  const Instance inst = tiny_instance(6, {2, 1, 2, 1, true});
  const FirstStage fs = FirstStage::zeros(1, 2);
  CHECK_THROWS_AS(exact_q(inst, fs, inst.uncertainty, {}, {}, 10), CapExceeded);
  CHECK_THROWS_AS(exact_full(inst, inst.uncertainty, {}, {}, 10), CapExceeded);
}
