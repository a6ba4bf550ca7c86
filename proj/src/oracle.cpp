#include "edgeplan/oracle.hpp"

namespace edgeplan {

ExactQ exact_q(const Instance& inst, const FirstStage& fs, const UncertaintySpec& spec,
               const SolverParams& params, const ModelOptions& opts, std::uint64_t cap) {
  const auto candidates = enumerate_candidates(inst.aps(), inst.horizon, spec.budget(), cap);
  ExactQ out;
  out.value = -kInf;
  out.candidates = candidates.size();
  for (const auto& g : candidates) {
    const Eigen::MatrixXd demand = realize(spec, inst.forecast, g);
    const double v = solve_recourse(inst, fs, demand, opts, params).value;
    if (v > out.value) {
      out.value = v;
      out.argmax = g;
    }
  }
  return out;
}

ExactFull exact_full(const Instance& inst, const UncertaintySpec& spec, const SolverParams& params,
                     const ModelOptions& opts, std::uint64_t cap) {
  const auto candidates = enumerate_candidates(inst.aps(), inst.horizon, spec.budget(), cap);
  std::vector<Eigen::MatrixXd> pool;
  pool.reserve(candidates.size());
  for (const auto& g : candidates) pool.push_back(realize(spec, inst.forecast, g));
  const BuiltModel bm = build_outer_mp(inst, pool, opts);
  const SolveResult res = solve(bm.model, params);
  if (res.status != SolveStatus::kOptimal)
    throw BackendError("deterministic equivalent ended with status " + to_string(res.status));
  ExactFull out;
  out.value = res.objective;
  out.first_stage = extract_first_stage(inst, bm.map, res);
  out.first_stage_cost = reservation_cost(inst, out.first_stage);
  out.candidates = candidates.size();
  return out;
}

}  // namespace edgeplan
