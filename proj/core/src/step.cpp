#include "plwk/step.hpp"

#include "plwk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace plwk {

int compute_omega(double residual_norm, double delta_i, double tau) {
  return residual_norm > tau * delta_i ? 1 : 0;
}

double compute_p(double t, double eta, double delta_i) {
  return t * ((1.0 - eta) * t - (1.0 + eta) * delta_i);
}

double compute_lambda(double p_value, const ParameterVector& grad,
                      std::optional<double> lambda_max, double grad_zero_tol) {
  const double grad_norm = grad.norm();
  if (grad_norm <= grad_zero_tol) return 0.0;
  double lambda = p_value / (grad_norm * grad_norm);
  if (lambda_max) lambda = std::min(lambda, *lambda_max);
  return lambda;
}

double grad_zero_tolerance(double residual_norm, double derivative_bound) {
  return zero_scale * (1.0 + residual_norm * derivative_bound);
}

bool Halfspace::contains(const ParameterVector& z) const {
  return inner(z - anchor, gradient) <= offset;
}

Halfspace build_halfspace(const OperatorSystem& sys, int i,
                          const ParameterVector& x, const DataVector& y_i_delta,
                          double delta_i, double eta) {
  const DataVector residual = sys.forward(i, x) - y_i_delta;
  const double rn = residual.norm();
  Halfspace h;
  h.anchor = x;
  h.gradient = sys.deriv_adjoint_apply(i, x, residual);
  h.offset = -rn * ((1.0 - eta) * rn - (1.0 + eta) * delta_i);
  return h;
}

namespace {

StepRecord base_record(const IterationState& state, int i, double rn,
                       int omega, double theta) {
  StepRecord rec;
  rec.k = state.k;
  rec.i = i;
  rec.residual_norm = rn;
  rec.omega = omega;
  rec.theta = theta;
  rec.pde_solves = 1;  // the forward evaluation
  return rec;
}

void require_new_iterate_in_ball(const OperatorSystem& sys,
                                 const ParameterVector& x_new,
                                 std::int64_t k) {
  const double dist = (x_new - sys.domain_center()).norm();
  if (!(dist <= sys.domain_radius())) {
    // The theory keeps iterates in B_{rho/2}(x*); leaving the ball signals a
    // misconfiguration (eta too small, x0 too far) and aborts the run.
    raise(ErrorCode::new_iterate_left_ball,
          "step k=" + std::to_string(k) + ": ||x_new - x0|| = " +
              std::to_string(dist) + " > rho = " +
              std::to_string(sys.domain_radius()));
  }
}

}  // namespace

StepResult plwk_step(const OperatorSystem& sys, const IterationState& state,
                     const NoisyObservations& obs, const SolverConfig& cfg,
                     int i) {
  const double delta_i = obs.noise_levels[static_cast<std::size_t>(i)];
  const DataVector residual =
      sys.forward(i, state.x) - obs.data[static_cast<std::size_t>(i)];
  const double rn = residual.norm();
  const int omega = compute_omega(rn, delta_i, cfg.tau);
  const double theta = cfg.theta.value_at(state.k);

  StepRecord rec = base_record(state, i, rn, omega, theta);
  if (omega == 0) {
    return {state.x, rec};
  }

  const ParameterVector grad = sys.deriv_adjoint_apply(i, state.x, residual);
  rec.pde_solves = 2;
  rec.grad_norm = grad.norm();

  const double p = compute_p(rn, cfg.eta, delta_i);
  const double ztol = grad_zero_tolerance(rn, sys.derivative_bound());
  const double lambda = compute_lambda(p, grad, cfg.lambda_max, ztol);
  rec.lambda = lambda;
  if (lambda == 0.0) {
    return {state.x, rec};
  }

  ParameterVector x_new = state.x - (theta * lambda) * grad;
  require_new_iterate_in_ball(sys, x_new, state.k);
  rec.step_norm = (x_new - state.x).norm();
  return {std::move(x_new), rec};
}

StepResult lwk_step(const OperatorSystem& sys, const IterationState& state,
                    const NoisyObservations& obs, const SolverConfig& cfg,
                    int i, double mu) {
  const double delta_i = obs.noise_levels[static_cast<std::size_t>(i)];
  const DataVector residual =
      sys.forward(i, state.x) - obs.data[static_cast<std::size_t>(i)];
  const double rn = residual.norm();
  const int omega = compute_omega(rn, delta_i, cfg.tau);

  StepRecord rec = base_record(state, i, rn, omega, 1.0);
  if (omega == 0) {
    return {state.x, rec};
  }

  const ParameterVector grad = sys.deriv_adjoint_apply(i, state.x, residual);
  rec.pde_solves = 2;
  rec.grad_norm = grad.norm();
  rec.lambda = mu;

  ParameterVector x_new = state.x - mu * grad;
  require_new_iterate_in_ball(sys, x_new, state.k);
  rec.step_norm = (x_new - state.x).norm();
  return {std::move(x_new), rec};
}

double exact_linesearch_step(const DataVector& r, const DataVector& jd) {
  const double denom = jd.squaredNorm();
  const double rn = r.norm();
  if (denom <= zero_scale * zero_scale * rn * rn) {
    if (rn > 0.0) {
      raise(ErrorCode::degenerate_direction,
            "line search: ||F'(x) d|| = 0 with nonzero residual");
    }
    return 0.0;
  }
  return -inner(r, jd) / denom;
}

StepResult lwkls_step(const OperatorSystem& sys, const IterationState& state,
                      const NoisyObservations& obs, const SolverConfig& cfg,
                      int i, double step_cap) {
  const double delta_i = obs.noise_levels[static_cast<std::size_t>(i)];
  const DataVector residual =
      sys.forward(i, state.x) - obs.data[static_cast<std::size_t>(i)];
  const double rn = residual.norm();
  const int omega = compute_omega(rn, delta_i, cfg.tau);

  StepRecord rec = base_record(state, i, rn, omega, 1.0);
  if (omega == 0) {
    return {state.x, rec};
  }

  const ParameterVector direction =
      -sys.deriv_adjoint_apply(i, state.x, residual);
  rec.grad_norm = direction.norm();
  const DataVector jd = sys.deriv_apply(i, state.x, direction);
  rec.pde_solves = 3;  // forward + adjoint + the extra derivative application

  const double s_star = exact_linesearch_step(residual, jd);
  const double s = std::min(s_star, step_cap);
  rec.lambda = s;

  ParameterVector x_new = state.x + s * direction;
  require_new_iterate_in_ball(sys, x_new, state.k);
  rec.step_norm = (x_new - state.x).norm();
  return {std::move(x_new), rec};
}

}  // namespace plwk
