#pragma once

#include "plwk/system.hpp"
#include "plwk/types.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace plwk::problems {

enum class ParamNorm { l2, h1 };
enum class PdeSolver { cholesky, conjugate_gradient };

const char* to_string(ParamNorm n);
std::optional<ParamNorm> parse_param_norm(std::string_view name);

struct GammaBump {
  double cx = 0.5;
  double cy = 0.5;
  double amplitude = 2.0;
  double radius = 0.15;
};

// Coefficient field gamma*(x, y) = background + sum of Gaussian bumps,
// evaluable on any grid (the data-generation grid is finer than the
// inversion grid). The two-bump default is a stand-in target, not a
// published profile.
struct GammaProfile {
  double background = 1.0;
  std::vector<GammaBump> bumps;

  double operator()(double x, double y) const;

  static GammaProfile constant(double value);
  static GammaProfile default_two_bumps();

  std::string describe() const;
};

struct EllipticOptions {
  int grid_n = 31;  // interior nodes per axis; h = 1/(grid_n + 1)
  int n_experiments = 12;
  double gamma_min = 0.1;
  double gamma_max = 10.0;
  GammaProfile true_gamma = GammaProfile::default_two_bumps();
  ParamNorm param_norm = ParamNorm::h1;
  PdeSolver pde_solver = PdeSolver::cholesky;
  // rho = factor * ||gamma* - gamma0|| in the parameter norm; >= 2 so the
  // true coefficient sits inside B_{rho/2}(gamma0). The default keeps the
  // ball as tight as that allows: the tangential cone constant grows quickly
  // with coefficient excursions toward gamma_min.
  double ball_radius_factor = 2.0;
  double derivative_bound_safety = 1.5;
};

// Identification of the diffusion coefficient in -div(gamma grad u) = 0 on
// the unit square from Dirichlet-to-Neumann measurements, discretized with
// 5-point finite differences and harmonic averaging of gamma at cell edges.
//
// Solver coordinates: parameter vectors are gamma's interior nodal values
// mapped through the Cholesky factor of the parameter metric (L2 or H1), and
// data vectors are boundary fluxes scaled by the square roots of the
// trapezoidal boundary weights. Euclidean inner products on these
// coordinates therefore equal the weighted inner products on nodal values,
// and the adjoint below realizes the H1 smoothing lift exactly.
//
// gamma is known on the boundary (fixed to the trace of gamma*); only the
// interior values are unknowns. The exact data is generated on a grid with
// half the spacing and restricted to the coarse boundary nodes so that the
// inversion never sees its own discretization.
class EllipticProblem final : public OperatorSystem {
 public:
  explicit EllipticProblem(EllipticOptions opts = {});
  ~EllipticProblem() override;

  EllipticProblem(const EllipticProblem&) = delete;
  EllipticProblem& operator=(const EllipticProblem&) = delete;

  // OperatorSystem (solver coordinates)
  int n_equations() const override { return opts_.n_experiments; }
  const ParameterVector& domain_center() const override { return x0_; }
  double domain_radius() const override { return rho_; }
  double derivative_bound() const override { return derivative_bound_; }
  Index parameter_dim() const override;
  Index data_dim(int i) const override;
  DataVector forward(int i, const ParameterVector& x) const override;
  DataVector deriv_apply(int i, const ParameterVector& x,
                         const ParameterVector& h) const override;
  ParameterVector deriv_adjoint_apply(int i, const ParameterVector& x,
                                      const DataVector& r) const override;

  // --- problem-space surface (nodal values, physical norms) ---

  using BoundaryFn = std::function<double(double, double)>;

  int grid_n() const { return opts_.grid_n; }
  double grid_h() const;
  Index n_interior() const;
  Index n_measurements() const;  // 4 * grid_n boundary nodes, corners excluded

  // Arc length along the boundary, counterclockwise from (0, 0).
  static double boundary_arc_length(double x, double y);

  // Dirichlet voltage profile U_i evaluated anywhere on the boundary, and
  // sampled at the measurement nodes. Raises index_out_of_range for
  // i outside [0, N).
  double boundary_profile_at(int i, double x, double y) const;
  DataVector boundary_profile(int i) const;

  std::vector<std::pair<double, double>> measurement_positions() const;
  const DataVector& measurement_weights() const { return meas_w_; }

  struct ForwardSolution {
    Eigen::VectorXd interior;  // grid_n^2 nodal values
    DataVector flux;           // co-normal flux at the measurement nodes
  };

  // Direct solve with a fully explicit coefficient field (interior values
  // plus a boundary coefficient function) and Dirichlet data. Raises
  // gamma_out_of_bounds / solve_failed.
  ForwardSolution solve_forward_nodal(const Eigen::VectorXd& gamma_interior,
                                      const BoundaryFn& gamma_boundary,
                                      const BoundaryFn& dirichlet_value) const;
  // Same with the problem's own coefficient trace and experiment i.
  ForwardSolution solve_forward_nodal(const Eigen::VectorXd& gamma_interior,
                                      int i) const;

  // Discrete harmonic extension of boundary values onto the interior grid.
  Eigen::VectorXd harmonic_extension(const BoundaryFn& boundary_value) const;

  // --- exact data and reference ---

  // Fine-grid data restricted to the coarse boundary nodes (solver coords).
  const std::vector<DataVector>& exact_data() const { return exact_data_; }
  // Same pipeline on the inversion grid itself; diagnostics only.
  std::vector<DataVector> coarse_grid_data() const;

  const ParameterVector& reference() const { return x_star_; }
  Eigen::VectorXd gamma_star_nodal() const { return gamma_star_int_; }
  Eigen::VectorXd initial_guess_nodal() const { return gamma0_int_; }

  // --- coordinate maps ---
  ParameterVector to_solver(const Eigen::VectorXd& gamma_interior) const;
  Eigen::VectorXd to_nodal(const ParameterVector& x) const;
  DataVector data_to_solver(const DataVector& nodal_flux) const;
  DataVector data_to_nodal(const DataVector& d) const;

  const EllipticOptions& options() const { return opts_; }
  std::string describe() const;

 private:
  struct Impl;

  void require_gamma_admissible(const Eigen::VectorXd& gamma_interior) const;

  EllipticOptions opts_;
  std::unique_ptr<Impl> impl_;

  Eigen::VectorXd gamma_star_int_;
  Eigen::VectorXd gamma0_int_;
  ParameterVector x0_;
  ParameterVector x_star_;
  std::vector<DataVector> exact_data_;
  DataVector meas_w_;
  DataVector meas_sqrt_w_;
  double rho_ = 0;
  double derivative_bound_ = 0;
};

}  // namespace plwk::problems
