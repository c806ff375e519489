#include "plwk/config.hpp"

#include "plwk/errors.hpp"
#include "plwk/system.hpp"

#include <cmath>
#include <string>

namespace plwk {

const char* to_string(IndexPolicy policy) {
  return policy == IndexPolicy::cyclic ? "cyclic" : "randomized";
}

ThetaSchedule ThetaSchedule::alternating(double first, double second) {
  ThetaSchedule s;
  s.kind = Kind::alternating;
  s.lo = std::min(first, second);
  s.hi = std::max(first, second);
  return s;
}

double ThetaSchedule::value_at(std::int64_t k) const {
  switch (kind) {
    case Kind::constant: return lo;
    case Kind::alternating: return (k % 2 == 0) ? lo : hi;
  }
  return lo;
}

SolverConfig validate_config(const SolverConfig& cfg, const OperatorSystem& sys) {
  if (!(cfg.eta >= 0.0) || !(cfg.eta < 1.0)) {
    raise(ErrorCode::eta_out_of_range,
          "eta = " + std::to_string(cfg.eta) + ", need 0 <= eta < 1");
  }
  const double tau_floor = (1.0 + cfg.eta) / (1.0 - cfg.eta);
  if (!(cfg.tau > tau_floor)) {
    raise(ErrorCode::tau_too_small,
          "tau = " + std::to_string(cfg.tau) + " <= (1+eta)/(1-eta) = " +
              std::to_string(tau_floor));
  }
  const double a = cfg.theta.min();
  const double b = cfg.theta.max();
  if (!(a > 0.0) || !(a <= b) || !(b < 2.0)) {
    raise(ErrorCode::theta_out_of_range,
          "theta range [" + std::to_string(a) + ", " + std::to_string(b) +
              "] not contained in (0, 2)");
  }
  if (cfg.lambda_max) {
    const double c = sys.derivative_bound();
    const double lambda_min = (1.0 - cfg.eta) / (c * c);
    if (!(*cfg.lambda_max > lambda_min)) {
      raise(ErrorCode::lambda_max_too_small,
            "lambda_max = " + std::to_string(*cfg.lambda_max) +
                " <= (1-eta)/C^2 = " + std::to_string(lambda_min));
    }
  }
  if (cfg.max_cycles < 1) {
    raise(ErrorCode::invalid_config, "max_cycles must be positive");
  }
  if (cfg.residual_floor && !(*cfg.residual_floor >= 0.0)) {
    raise(ErrorCode::invalid_config, "residual_floor must be non-negative");
  }
  return cfg;
}

}  // namespace plwk
