#pragma once

#include "plwk/config.hpp"
#include "plwk/records.hpp"
#include "plwk/system.hpp"

#include <cstdint>

namespace plwk {

// Per-step verification of the error-gain inequality
//   ||x* - x_{k+1}||^2 + theta_k (2 - theta_k) (p(||r||)/||g||)^2
//     <= ||x* - x_k||^2          (+ relative slack)
// recomputed from the recorded step data. For truncated steps the gain term
// theta (2-theta) lambda p is used, which coincides with the above when the
// step is untruncated. Requires the run to have been recorded against a
// reference that solves every equation inside the ball; violations are
// reported, not fatal (a configured eta below the problem's actual
// nonlinearity shows up here).
struct MonotonicityReport {
  std::int64_t steps_checked = 0;
  std::int64_t violations = 0;
  std::int64_t first_violation_k = -1;
  double worst_relative_excess = 0;

  bool clean() const { return violations == 0; }
};

MonotonicityReport check_monotonicity(const RunRecord& run,
                                      const SolverConfig& cfg,
                                      const NoisyObservations& obs);

// Exact-data prefix bounds:
//   sum_k lambda_k ||F_{[k],0}(x_k)||^2 <= ||x* - x0||^2 / (a (2-b) (1-eta))
//   sum_k ||x_{k+1} - x_k||^2           <= 4 sum_k lambda_k ||...||^2
// checked at every prefix. Raises invalid_config unless all noise levels
// are zero.
struct SummabilityReport {
  bool energy_bounded = true;
  bool step_norms_bounded = true;
  double energy_sum = 0;
  double energy_bound = 0;
  double step_norm_sum = 0;
  std::int64_t first_violation_k = -1;

  bool clean() const { return energy_bounded && step_norms_bounded; }
};

SummabilityReport check_summability(const RunRecord& run,
                                    const SolverConfig& cfg,
                                    const NoisyObservations& obs,
                                    const ParameterVector& reference);

}  // namespace plwk
