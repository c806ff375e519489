#include "plwk/problems/tcc.hpp"

#include "plwk/errors.hpp"
#include "plwk/rng.hpp"

#include <algorithm>
#include <cmath>

namespace plwk::problems {

namespace {

ParameterVector draw_point(Rng& rng, const ParameterVector& center,
                           double max_radius) {
  ParameterVector direction(center.size());
  for (Index j = 0; j < direction.size(); ++j) direction[j] = rng.gaussian();
  const double dn = direction.norm();
  if (dn == 0) return center;
  const double radius = max_radius * rng.uniform01();
  return center + (radius / dn) * direction;
}

bool admissible(const OperatorSystem& sys, const ParameterVector& x) {
  try {
    (void)sys.forward(0, x);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::gamma_out_of_bounds ||
        e.code() == ErrorCode::outside_domain_ball) {
      return false;
    }
    throw;
  }
}

}  // namespace

TccEstimate estimate_tcc_eta(const OperatorSystem& sys, int n_samples,
                             double radius_fraction, std::uint64_t seed) {
  if (n_samples < 1) {
    raise(ErrorCode::invalid_config, "n_samples must be positive");
  }
  if (!(radius_fraction > 0.0) || !(radius_fraction <= 1.0)) {
    raise(ErrorCode::invalid_config, "radius_fraction must lie in (0, 1]");
  }

  const ParameterVector& x0 = sys.domain_center();
  const double max_radius = radius_fraction * sys.domain_radius();

  TccEstimate estimate;
  for (int sample = 0; sample < n_samples; ++sample) {
    Rng rng(substream_seed(seed, {0x746363u,
                                  static_cast<std::uint64_t>(sample)}));

    ParameterVector x, xbar;
    bool found = false;
    for (int attempt = 0; attempt < 32 && !found; ++attempt) {
      x = draw_point(rng, x0, max_radius);
      xbar = draw_point(rng, x0, max_radius);
      found = admissible(sys, x) && admissible(sys, xbar);
    }
    if (!found) {
      ++estimate.pairs_skipped;
      continue;
    }

    const ParameterVector step = xbar - x;
    // all evaluations at one linearization point are grouped so problems
    // that factorize per point do it once
    std::vector<DataVector> fx, fxbar;
    fx.reserve(static_cast<std::size_t>(sys.n_equations()));
    fxbar.reserve(static_cast<std::size_t>(sys.n_equations()));
    for (int i = 0; i < sys.n_equations(); ++i) fx.push_back(sys.forward(i, x));
    for (int i = 0; i < sys.n_equations(); ++i) {
      fxbar.push_back(sys.forward(i, xbar));
    }
    bool used = false;
    for (int i = 0; i < sys.n_equations(); ++i) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const DataVector difference = fxbar[ii] - fx[ii];
      const double dn = difference.norm();
      if (dn <= zero_scale * std::max(1.0, fx[ii].norm() + fxbar[ii].norm())) {
        continue;
      }
      const DataVector linear = sys.deriv_apply(i, x, step);
      const double ratio = (difference - linear).norm() / dn;
      estimate.eta_hat = std::max(estimate.eta_hat, ratio);
      used = true;
    }
    if (used) {
      ++estimate.pairs_used;
    } else {
      ++estimate.pairs_skipped;
    }
  }

  if (estimate.pairs_used == 0) {
    raise(ErrorCode::no_valid_pairs,
          "no admissible sample pair produced a usable ratio");
  }
  return estimate;
}

}  // namespace plwk::problems
