#pragma once

#include "plwk/types.hpp"

#include <vector>

namespace plwk {

// The family F_0, ..., F_{N-1} in solver coordinates: forward, derivative and
// adjoint actions, plus the trust ball B_rho(x0) on which the derivative
// bound C applies. Implementations must keep the adjoint an exact transpose
// of the derivative action, so that
//   <deriv_apply(i,x,h), r> == <h, deriv_adjoint_apply(i,x,r)>
// holds to floating-point roundoff.
class OperatorSystem {
 public:
  virtual ~OperatorSystem() = default;

  virtual int n_equations() const = 0;

  // x0; also the initial iterate of every run.
  virtual const ParameterVector& domain_center() const = 0;
  virtual double domain_radius() const = 0;

  // C >= sup ||F_i'(x)|| over the ball (possibly an estimate supplied by the
  // problem). Used only for configuration validation and step-size bounds,
  // never inside the iteration itself.
  virtual double derivative_bound() const = 0;

  virtual Index parameter_dim() const = 0;
  virtual Index data_dim(int i) const = 0;

  // All three accept only x with ||x - x0|| <= rho and raise
  // outside_domain_ball otherwise.
  virtual DataVector forward(int i, const ParameterVector& x) const = 0;
  virtual DataVector deriv_apply(int i, const ParameterVector& x,
                                 const ParameterVector& h) const = 0;
  virtual ParameterVector deriv_adjoint_apply(int i, const ParameterVector& x,
                                              const DataVector& r) const = 0;

  bool in_domain_ball(const ParameterVector& x) const;

 protected:
  void require_in_ball(const ParameterVector& x, const char* where) const;
  void require_index(int i, const char* where) const;
};

// y_i^delta together with the per-equation noise levels delta_i.
// delta_i == 0 for all i denotes the exact-data regime.
struct NoisyObservations {
  std::vector<DataVector> data;
  std::vector<double> noise_levels;

  int n() const { return static_cast<int>(data.size()); }

  static NoisyObservations exact(std::vector<DataVector> exact_data);
};

}  // namespace plwk
