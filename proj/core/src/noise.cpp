#include "plwk/harness/noise.hpp"

#include "plwk/errors.hpp"
#include "plwk/rng.hpp"

namespace plwk::harness {

NoisyObservations add_noise(const std::vector<DataVector>& exact_data,
                            double noise_percent, std::uint64_t seed) {
  if (!(noise_percent >= 0.0)) {
    raise(ErrorCode::invalid_config, "noise_percent must be non-negative");
  }
  NoisyObservations obs;
  obs.data.reserve(exact_data.size());
  obs.noise_levels.reserve(exact_data.size());

  for (std::size_t i = 0; i < exact_data.size(); ++i) {
    const DataVector& y = exact_data[i];
    if (noise_percent == 0.0 || y.norm() == 0.0) {
      obs.data.push_back(y);
      obs.noise_levels.push_back(0.0);
      continue;
    }
    Rng rng(substream_seed(seed, {0x6e6f697365u, static_cast<std::uint64_t>(i)}));
    DataVector e(y.size());
    for (Index j = 0; j < e.size(); ++j) e[j] = rng.gaussian();
    const double target = (noise_percent / 100.0) * y.norm();
    e *= target / e.norm();
    obs.data.push_back(y + e);
    obs.noise_levels.push_back(e.norm());
  }
  return obs;
}

}  // namespace plwk::harness
