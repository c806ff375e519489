#pragma once

#include "plwk/system.hpp"

#include <cstdint>

namespace plwk::problems {

struct TccEstimate {
  double eta_hat = 0;   // empirical maximum linearization-to-difference ratio
  int pairs_used = 0;
  int pairs_skipped = 0;  // degenerate pairs (difference below zero scale)
};

// Empirical tangential-cone constant: the maximum over sampled pairs
// (x, xbar) inside B_{rho * radius_fraction}(x0) and equations i of
//   ||F_i(xbar) - F_i(x) - F_i'(x)(xbar - x)|| / ||F_i(xbar) - F_i(x)||.
// A lower bound for the true local constant. Sample j is drawn from
// substream (seed, j), so enlarging n_samples extends the sample set without
// changing earlier draws and the estimate is monotone in n_samples.
// Inadmissible draws (coefficient bounds) are retried; raises no_valid_pairs
// if nothing admissible is found.
TccEstimate estimate_tcc_eta(const OperatorSystem& sys, int n_samples,
                             double radius_fraction, std::uint64_t seed);

}  // namespace plwk::problems
