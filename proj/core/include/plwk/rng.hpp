#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace plwk {

// All randomness in the library flows from a single root seed through
// substream_seed(root, {ids...}), so any component (one cycle's permutation,
// one noise draw) can be re-run in isolation and reproduces exactly.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t substream_seed(std::uint64_t root, std::initializer_list<std::uint64_t> ids);

// Small deterministic generator (splitmix64 stream). Gaussian variates use
// Box-Muller so output does not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform01();

  double gaussian();

  // Fisher-Yates permutation of {0, ..., n-1}
  std::vector<int> permutation(int n);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace plwk
