#pragma once

#include <cstdint>
#include <string>

#include "edgeplan/instance.hpp"
#include "edgeplan/models.hpp"
#include "edgeplan/solver.hpp"
#include "edgeplan/uncertainty.hpp"

namespace edgeplan {

/// Brute-force worst-case recourse value: every vertex candidate is realized
/// and its recourse MILP solved. Throws CapExceeded instead of sampling.
struct ExactQ {
  double value = 0.0;
  GCandidate argmax;
  std::size_t candidates = 0;
};

ExactQ exact_q(const Instance& inst, const FirstStage& fs, const UncertaintySpec& spec,
               const SolverParams& params = {}, const ModelOptions& opts = {},
               std::uint64_t cap = kDefaultCandidateCap);

/// Deterministic equivalent over all vertex candidates: one recourse copy per
/// candidate in a single MILP.
struct ExactFull {
  double value = 0.0;
  FirstStage first_stage;
  double first_stage_cost = 0.0;
  std::size_t candidates = 0;
};

ExactFull exact_full(const Instance& inst, const UncertaintySpec& spec,
                     const SolverParams& params = {}, const ModelOptions& opts = {},
                     std::uint64_t cap = kDefaultCandidateCap);

}  // namespace edgeplan
