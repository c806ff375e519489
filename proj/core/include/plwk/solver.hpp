#pragma once

#include "plwk/config.hpp"
#include "plwk/method.hpp"
#include "plwk/records.hpp"
#include "plwk/system.hpp"

#include <cstdint>
#include <vector>

namespace plwk {

// Index order for the cycle starting at step cycle*N: identity when cyclic,
// a Fisher-Yates permutation drawn from substream (rng_seed, cycle) when
// randomized, so cycles are independent and reproducible.
std::vector<int> cycle_order(IndexPolicy policy, std::uint64_t rng_seed,
                             std::int64_t cycle, int n);

// [k]-selection: cyclic -> k mod N; randomized -> the (k mod N)-th entry of
// the current cycle's permutation.
int select_index(IndexPolicy policy, std::int64_t k, int n,
                 const std::vector<int>& cycle_permutation);

// Full iteration loop. Starts at x0 = sys.domain_center(), applies the
// method's step rule with the shared skipping rule, and stops when
//   (a) a full cycle passes with omega == 0 at every step (discrepancy stop;
//       k* is that cycle's start index, a multiple of N), or
//   (b) the summed residual falls below cfg.residual_floor, or
//   (c) cfg.max_cycles is reached.
// When a reference is given, per-step and per-cycle distances to it are
// recorded. Identical inputs (including rng_seed) produce bitwise-identical
// records.
RunRecord run(const Method& method, const OperatorSystem& sys,
              const NoisyObservations& obs, const SolverConfig& cfg,
              const ParameterVector* reference = nullptr);

}  // namespace plwk
