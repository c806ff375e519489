#include "plwk/diagnostics.hpp"

#include "plwk/errors.hpp"
#include "plwk/step.hpp"

#include <cmath>

namespace plwk {

MonotonicityReport check_monotonicity(const RunRecord& run,
                                      const SolverConfig& cfg,
                                      const NoisyObservations& obs) {
  MonotonicityReport report;
  for (const StepRecord& rec : run.steps) {
    if (rec.omega == 0) continue;
    if (std::isnan(rec.error_before) || std::isnan(rec.error_after)) continue;

    const double delta_i = obs.noise_levels[static_cast<std::size_t>(rec.i)];
    const double p = compute_p(rec.residual_norm, cfg.eta, delta_i);

    double gain;
    if (rec.lambda > 0.0 && rec.grad_norm > 0.0) {
      const double projection_lambda =
          p / (rec.grad_norm * rec.grad_norm);
      const bool truncated =
          cfg.lambda_max && rec.lambda < projection_lambda * (1.0 - 1e-12);
      gain = truncated ? rec.theta * (2.0 - rec.theta) * rec.lambda * p
                       : rec.theta * (2.0 - rec.theta) *
                             (p / rec.grad_norm) * (p / rec.grad_norm);
    } else {
      gain = 0.0;
    }

    ++report.steps_checked;
    const double lhs = rec.error_after * rec.error_after + gain;
    const double rhs = rec.error_before * rec.error_before;
    const double slack = 1e-10 * std::max(lhs, rhs);
    if (lhs > rhs + slack) {
      ++report.violations;
      if (report.first_violation_k < 0) report.first_violation_k = rec.k;
      const double excess = (lhs - rhs) / std::max(rhs, 1e-300);
      report.worst_relative_excess =
          std::max(report.worst_relative_excess, excess);
    }
  }
  return report;
}

SummabilityReport check_summability(const RunRecord& run,
                                    const SolverConfig& cfg,
                                    const NoisyObservations& obs,
                                    const ParameterVector& reference) {
  for (double delta : obs.noise_levels) {
    if (delta != 0.0) {
      raise(ErrorCode::invalid_config,
            "summability bounds apply to exact-data runs only");
    }
  }

  const double a = cfg.theta.min();
  const double b = cfg.theta.max();
  const double dist = (reference - run.initial_iterate).norm();

  SummabilityReport report;
  report.energy_bound = dist * dist / (a * (2.0 - b) * (1.0 - cfg.eta));

  double energy = 0;
  double steps = 0;
  for (const StepRecord& rec : run.steps) {
    energy += rec.lambda * rec.residual_norm * rec.residual_norm;
    steps += rec.step_norm * rec.step_norm;
    const double slack = 1e-10 * std::max(1.0, report.energy_bound);
    if (energy > report.energy_bound + slack) {
      report.energy_bounded = false;
      if (report.first_violation_k < 0) report.first_violation_k = rec.k;
    }
    if (steps > 4.0 * energy + 1e-10 * std::max(1.0, energy)) {
      report.step_norms_bounded = false;
      if (report.first_violation_k < 0) report.first_violation_k = rec.k;
    }
  }
  report.energy_sum = energy;
  report.step_norm_sum = steps;
  return report;
}

}  // namespace plwk
