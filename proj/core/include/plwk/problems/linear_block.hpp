#pragma once

#include "plwk/system.hpp"
#include "plwk/types.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace plwk::problems {

struct LinearBlockOptions {
  int n_blocks = 6;
  int rows_per_block = 1;
  int n_unknowns = 40;
  // 0 = mutually independent random rows; towards 1 every row shares a
  // common direction, which drives up the condition number of the stacked
  // matrix and slows the cyclic sweep.
  double coherence = 0.7;
  double row_scale_min = 0.5;
  double row_scale_max = 2.0;
  std::uint64_t seed = 1;
};

// F_i(x) = A_i x. Exactly linear, so the tangential cone constant is 0 and
// every step-kernel quantity has a closed-form oracle; with single-row
// blocks and theta == 1 the projective step reproduces the classical
// Kaczmarz hyperplane projection.
class LinearBlockProblem final : public OperatorSystem {
 public:
  LinearBlockProblem(std::vector<Eigen::MatrixXd> blocks,
                     ParameterVector true_solution, ParameterVector x0,
                     double ball_radius_factor = 2.5);

  static LinearBlockProblem random(const LinearBlockOptions& opts);

  // OperatorSystem
  int n_equations() const override { return static_cast<int>(blocks_.size()); }
  const ParameterVector& domain_center() const override { return x0_; }
  double domain_radius() const override { return rho_; }
  double derivative_bound() const override { return derivative_bound_; }
  Index parameter_dim() const override { return x0_.size(); }
  Index data_dim(int i) const override;
  DataVector forward(int i, const ParameterVector& x) const override;
  DataVector deriv_apply(int i, const ParameterVector& x,
                         const ParameterVector& h) const override;
  ParameterVector deriv_adjoint_apply(int i, const ParameterVector& x,
                                      const DataVector& r) const override;

  const Eigen::MatrixXd& block(int i) const;
  const ParameterVector& true_solution() const { return x_star_; }

  // y_i = A_i x*
  std::vector<DataVector> exact_data() const;

  std::string describe() const;

 private:
  std::vector<Eigen::MatrixXd> blocks_;
  ParameterVector x_star_;
  ParameterVector x0_;
  double rho_ = 0;
  double derivative_bound_ = 0;
  std::string generator_note_;
};

// Largest singular value via power iteration on A^T A (deterministic start,
// iterated to a fixed-point tolerance).
double spectral_norm_power_iteration(const Eigen::MatrixXd& a,
                                     std::uint64_t seed = 99,
                                     int max_iterations = 500,
                                     double tolerance = 1e-13);

}  // namespace plwk::problems
