#include "plwk/rng.hpp"

#include <cmath>
#include <numbers>

namespace plwk {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t root,
                             std::initializer_list<std::uint64_t> ids) {
  std::uint64_t s = root;
  (void)splitmix64(s);
  for (std::uint64_t id : ids) {
    s ^= 0x632be59bd9b4e019ULL + id;
    (void)splitmix64(s);
  }
  return s;
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  // Box-Muller on (0,1] x [0,1)
  double u1 = 1.0 - uniform01();
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  have_spare_ = true;
  return radius * std::cos(angle);
}

std::vector<int> Rng::permutation(int n) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
  for (int j = n - 1; j > 0; --j) {
    int swap_with = static_cast<int>(next_u64() % static_cast<std::uint64_t>(j + 1));
    std::swap(order[static_cast<std::size_t>(j)], order[static_cast<std::size_t>(swap_with)]);
  }
  return order;
}

}  // namespace plwk
