#include "plwk/solver.hpp"

#include "plwk/errors.hpp"
#include "plwk/rng.hpp"
#include "plwk/step.hpp"

#include <cmath>
#include <utility>

namespace plwk {

namespace {

constexpr std::uint64_t kPermutationStream = 0x7065726d;  // "perm"

}  // namespace

std::vector<int> cycle_order(IndexPolicy policy, std::uint64_t rng_seed,
                             std::int64_t cycle, int n) {
  if (policy == IndexPolicy::cyclic) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
    return order;
  }
  Rng rng(substream_seed(rng_seed, {kPermutationStream,
                                    static_cast<std::uint64_t>(cycle)}));
  return rng.permutation(n);
}

int select_index(IndexPolicy policy, std::int64_t k, int n,
                 const std::vector<int>& cycle_permutation) {
  const int slot = static_cast<int>(k % n);
  if (policy == IndexPolicy::cyclic) return slot;
  return cycle_permutation[static_cast<std::size_t>(slot)];
}

namespace {

struct CycleDiagnostics {
  double residual_sum = 0;
  double residual_max = 0;
};

// Residuals of every equation at the current iterate; these evaluations are
// bookkeeping, not part of the method's cost accounting.
CycleDiagnostics residual_diagnostics(const OperatorSystem& sys,
                                      const NoisyObservations& obs,
                                      const ParameterVector& x) {
  CycleDiagnostics d;
  for (int i = 0; i < sys.n_equations(); ++i) {
    const double rn =
        (sys.forward(i, x) - obs.data[static_cast<std::size_t>(i)]).norm();
    d.residual_sum += rn;
    d.residual_max = std::max(d.residual_max, rn);
  }
  return d;
}

}  // namespace

RunRecord run(const Method& method, const OperatorSystem& sys,
              const NoisyObservations& obs, const SolverConfig& cfg_in,
              const ParameterVector* reference) {
  const SolverConfig cfg = validate_config(cfg_in, sys);
  const int n = sys.n_equations();
  if (obs.n() != n || static_cast<int>(obs.noise_levels.size()) != n) {
    raise(ErrorCode::dimension_mismatch,
          "observations do not match the number of equations");
  }

  // PLWKr is PLWK with a forced per-cycle random permutation.
  IndexPolicy policy = cfg.index_policy;
  if (method.tag == MethodTag::plwkr) policy = IndexPolicy::randomized;

  const double c_bound = sys.derivative_bound();
  const double lwk_mu = method.resolved_lwk_mu(c_bound);
  const double lwkls_cap = method.resolved_lwkls_cap(c_bound);

  RunRecord record;
  record.initial_iterate = sys.domain_center();

  IterationState state;
  state.x = sys.domain_center();
  state.k = 0;

  std::int64_t cum_solves = 0;

  auto emit_row = [&](std::int64_t cycle, int skipped) {
    CycleRow row;
    row.cycle = cycle;
    const CycleDiagnostics d = residual_diagnostics(sys, obs, state.x);
    row.residual_sum = d.residual_sum;
    row.residual_max = d.residual_max;
    if (reference) row.error_ref = (*reference - state.x).norm();
    row.skipped_steps = skipped;
    row.cum_pde_solves = cum_solves;
    record.cycles.push_back(row);
    return row;
  };

  emit_row(0, 0);

  for (std::int64_t cycle = 0; cycle < cfg.max_cycles; ++cycle) {
    state.cycle_permutation = cycle_order(policy, cfg.rng_seed, cycle, n);
    int skipped = 0;

    for (int slot = 0; slot < n; ++slot) {
      state.k = cycle * n + slot;
      state.active_index = select_index(policy, state.k, n, state.cycle_permutation);

      const double err_before =
          reference ? (*reference - state.x).norm() : record_nan;

      StepResult result;
      switch (method.tag) {
        case MethodTag::plwk:
        case MethodTag::plwkr:
          result = plwk_step(sys, state, obs, cfg, state.active_index);
          break;
        case MethodTag::lwk:
          result = lwk_step(sys, state, obs, cfg, state.active_index, lwk_mu);
          break;
        case MethodTag::lwkls:
          result = lwkls_step(sys, state, obs, cfg, state.active_index, lwkls_cap);
          break;
      }

      cum_solves += result.record.pde_solves;
      if (result.record.omega == 0) ++skipped;
      result.record.error_before = err_before;
      result.record.error_after =
          reference ? (*reference - result.x).norm() : record_nan;
      record.steps.push_back(result.record);
      state.x = std::move(result.x);
    }

    const CycleRow row = emit_row(cycle + 1, skipped);

    if (skipped == n) {
      // A full cycle with every step skipped: the discrepancy rule fires and
      // k* is the cycle's start index.
      record.stop_index = cycle * n;
      record.stop_reason = StopReason::converged;
      record.final_iterate = state.x;
      return record;
    }
    if (cfg.residual_floor && row.residual_sum < *cfg.residual_floor) {
      record.stop_index = (cycle + 1) * n;
      record.stop_reason = StopReason::residual_floor;
      record.final_iterate = state.x;
      return record;
    }
  }

  record.stop_index = cfg.max_cycles * n;
  record.stop_reason = StopReason::max_cycles;
  record.final_iterate = state.x;
  return record;
}

}  // namespace plwk
