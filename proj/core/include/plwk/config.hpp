#pragma once

#include <cstdint>
#include <optional>

namespace plwk {

class OperatorSystem;

enum class IndexPolicy { cyclic, randomized };

const char* to_string(IndexPolicy policy);

// Relaxation schedule producing theta_k confined to [lo, hi], which must be
// contained in (0, 2).
struct ThetaSchedule {
  enum class Kind { constant, alternating };

  Kind kind = Kind::constant;
  double lo = 1.0;
  double hi = 1.0;

  static ThetaSchedule constant(double value) { return {Kind::constant, value, value}; }
  // Alternates between the band endpoints: lo at even k, hi at odd k.
  static ThetaSchedule alternating(double first, double second);

  double value_at(std::int64_t k) const;
  double min() const { return lo; }
  double max() const { return hi; }
};

struct SolverConfig {
  double eta = 0.0;                  // tangential cone constant, in [0, 1)
  double tau = 3.0;                  // discrepancy threshold, > (1+eta)/(1-eta)
  ThetaSchedule theta;               // default: constant 1 (exact projection)
  std::optional<double> lambda_max;  // nullopt = untruncated step size
  IndexPolicy index_policy = IndexPolicy::cyclic;
  std::uint64_t rng_seed = 1;
  std::int64_t max_cycles = 500;

  // Engineering stop for exact-data runs, where the discrepancy rule cannot
  // fire at nonzero residuals: stop once the summed residual falls below
  // this floor. Reported as its own stop reason.
  std::optional<double> residual_floor = 1e-12;
};

// Returns cfg unchanged iff every invariant holds against the system's
// derivative bound; otherwise raises tau_too_small / theta_out_of_range /
// lambda_max_too_small / eta_out_of_range. Total: never crashes.
SolverConfig validate_config(const SolverConfig& cfg, const OperatorSystem& sys);

}  // namespace plwk
