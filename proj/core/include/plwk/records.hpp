#pragma once

#include "plwk/types.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace plwk {

enum class StopReason { converged, max_cycles, residual_floor };

const char* to_string(StopReason reason);

inline constexpr double record_nan = std::numeric_limits<double>::quiet_NaN();

// Snapshot of the iteration between steps.
struct IterationState {
  ParameterVector x;
  std::int64_t k = 0;
  int active_index = 0;
  // Index order of the current cycle; identity in cyclic mode, a seeded
  // permutation of {0..N-1} in randomized mode.
  std::vector<int> cycle_permutation;
};

struct StepRecord {
  std::int64_t k = 0;
  int i = 0;                  // [k], the active equation
  double residual_norm = 0;   // ||F_i(x_k) - y_i^delta||
  int omega = 0;              // bang-bang parameter; 0 implies step_norm == 0
  double theta = 1.0;
  double lambda = 0;
  double grad_norm = 0;       // ||F_i'(x_k)* r||; 0 when the step was skipped
  double step_norm = 0;       // ||x_{k+1} - x_k||
  int pde_solves = 0;         // operator evaluations consumed by this step
  // Distances to the reference solution; NaN when no reference was given.
  double error_before = record_nan;
  double error_after = record_nan;
};

// One row per completed cycle (plus the cycle-0 row describing x0). Row c
// describes the iterate x_{cN}; skipped_steps counts the omega == 0 steps of
// the cycle that ended there (0 for row 0).
struct CycleRow {
  std::int64_t cycle = 0;
  double error_ref = record_nan;  // ||x_{cN} - reference||
  double residual_sum = 0;        // sum_i ||F_i(x_{cN}) - y_i^delta||
  double residual_max = 0;
  int skipped_steps = 0;
  std::int64_t cum_pde_solves = 0;
};

struct RunRecord {
  std::int64_t stop_index = 0;  // k*; a multiple of N when converged
  StopReason stop_reason = StopReason::max_cycles;
  std::vector<CycleRow> cycles;  // cycles_executed + 1 rows
  std::vector<StepRecord> steps;
  ParameterVector initial_iterate;
  ParameterVector final_iterate;
};

}  // namespace plwk
