#pragma once

#include "plwk/config.hpp"
#include "plwk/records.hpp"
#include "plwk/system.hpp"
#include "plwk/types.hpp"

#include <optional>

namespace plwk {

// Bang-bang parameter omega_k: 1 iff the active residual still exceeds
// tau * delta_i (strict inequality; the boundary falls to 0).
int compute_omega(double residual_norm, double delta_i, double tau);

// p_i(t) = t ((1-eta) t - (1+eta) delta_i). Exact data reduces this to
// (1-eta) t^2.
double compute_p(double t, double eta, double delta_i);

// Step size lambda = p / ||grad||^2, truncated at lambda_max when given.
// Gradients with ||grad|| <= grad_zero_tol count as zero and yield lambda 0.
double compute_lambda(double p_value, const ParameterVector& grad,
                      std::optional<double> lambda_max,
                      double grad_zero_tol = 0.0);

// Norm scale below which F_i'(x)* F_{i,delta}(x) is treated as zero. The
// theory tests exact equality; floating point needs a tolerance tied to the
// residual magnitude and the derivative bound.
double grad_zero_tolerance(double residual_norm, double derivative_bound);

// The separating halfspace H_{i,x}. Every solution of equation i inside the
// trust ball belongs to it; x itself does not as soon as
// ||F_{i,delta}(x)|| > (1+eta)(1-eta)^{-1} delta_i.
struct Halfspace {
  ParameterVector anchor;    // x
  ParameterVector gradient;  // F_i'(x)* F_{i,delta}(x)
  double offset = 0;         // -||r|| ((1-eta)||r|| - (1+eta) delta_i)

  // membership(z) <=> <z - anchor, gradient> <= offset
  bool contains(const ParameterVector& z) const;
};

Halfspace build_halfspace(const OperatorSystem& sys, int i,
                          const ParameterVector& x, const DataVector& y_i_delta,
                          double delta_i, double eta);

struct StepResult {
  ParameterVector x;
  StepRecord record;
};

// One update of the projective iteration for equation i at state.x. With
// theta == 1 and no truncation this is the orthogonal projection onto
// H_{i,x}: <x_new - x, g> == -p(||r||) and x_new - x is antiparallel to g.
// Raises new_iterate_left_ball if the update violates ||x_new - x0|| <= rho,
// which signals a violated assumption rather than a recoverable condition.
StepResult plwk_step(const OperatorSystem& sys, const IterationState& state,
                     const NoisyObservations& obs, const SolverConfig& cfg,
                     int i);

// Classical fixed-step update x - mu F_i'(x)* r with the same skipping rule.
// Callers should keep mu * C^2 <= 1.
StepResult lwk_step(const OperatorSystem& sys, const IterationState& state,
                    const NoisyObservations& obs, const SolverConfig& cfg,
                    int i, double mu);

// Steepest-descent step along d = -F_i'(x)* r with the exact minimizer of
// the linearized residual quadratic ||r + s F_i'(x) d||^2, capped at
// step_cap. Costs one extra derivative application per active step.
StepResult lwkls_step(const OperatorSystem& sys, const IterationState& state,
                      const NoisyObservations& obs, const SolverConfig& cfg,
                      int i, double step_cap);

// Exact minimizer of s -> ||r + s jd||^2 where jd = F_i'(x) d. Raises
// degenerate_direction when jd vanishes while r does not.
double exact_linesearch_step(const DataVector& r, const DataVector& jd);

}  // namespace plwk
