#pragma once

#include "plwk/system.hpp"

#include <cstdint>
#include <vector>

namespace plwk::harness {

// Per equation i: draws a zero-mean Gaussian vector, rescales it so
// ||e_i|| = (noise_percent/100) ||y_i|| exactly, and sets
// y_i^delta = y_i + e_i with delta_i = ||e_i|| (the noise level is known
// exactly, not just bounded). noise_percent == 0 returns the exact data
// untouched. Equation i draws from substream (seed, i).
NoisyObservations add_noise(const std::vector<DataVector>& exact_data,
                            double noise_percent, std::uint64_t seed);

}  // namespace plwk::harness
