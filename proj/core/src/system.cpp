#include "plwk/system.hpp"

#include "plwk/errors.hpp"

#include <string>

namespace plwk {

bool OperatorSystem::in_domain_ball(const ParameterVector& x) const {
  return (x - domain_center()).norm() <= domain_radius();
}

void OperatorSystem::require_in_ball(const ParameterVector& x,
                                     const char* where) const {
  const double dist = (x - domain_center()).norm();
  if (!(dist <= domain_radius())) {
    raise(ErrorCode::outside_domain_ball,
          std::string(where) + ": ||x - x0|| = " + std::to_string(dist) +
              " > rho = " + std::to_string(domain_radius()));
  }
}

void OperatorSystem::require_index(int i, const char* where) const {
  if (i < 0 || i >= n_equations()) {
    raise(ErrorCode::index_out_of_range,
          std::string(where) + ": equation index " + std::to_string(i) +
              " outside [0, " + std::to_string(n_equations()) + ")");
  }
}

NoisyObservations NoisyObservations::exact(std::vector<DataVector> exact_data) {
  NoisyObservations obs;
  obs.noise_levels.assign(exact_data.size(), 0.0);
  obs.data = std::move(exact_data);
  return obs;
}

}  // namespace plwk
