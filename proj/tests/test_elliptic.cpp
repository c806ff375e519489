#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "plwk/errors.hpp"
#include "plwk/problems/elliptic.hpp"
#include "plwk/problems/tcc.hpp"
#include "plwk/rng.hpp"

#include <cmath>

using namespace plwk;
using problems::EllipticOptions;
using problems::EllipticProblem;
using problems::GammaProfile;
using problems::ParamNorm;
using problems::PdeSolver;

namespace {

EllipticOptions small_options(int n = 9, int experiments = 4) {
  EllipticOptions opts;
  opts.grid_n = n;
  opts.n_experiments = experiments;
  return opts;
}

// a random smooth admissible coefficient around 1
Eigen::VectorXd wavy_gamma(const EllipticProblem& sys, Rng& rng,
                           double amplitude) {
  const int n = sys.grid_n();
  const double h = sys.grid_h();
  const double a1 = amplitude * (2.0 * rng.uniform01() - 1.0);
  const double a2 = amplitude * (2.0 * rng.uniform01() - 1.0);
  Eigen::VectorXd gamma(sys.n_interior());
  Index p = 0;
  for (int iy = 1; iy <= n; ++iy) {
    for (int ix = 1; ix <= n; ++ix, ++p) {
      const double x = ix * h;
      const double y = iy * h;
      gamma[p] = 1.0 + a1 * std::sin(M_PI * x) * std::sin(M_PI * y) +
                 a2 * std::sin(2 * M_PI * x) * std::sin(M_PI * y);
    }
  }
  return gamma;
}

}  // namespace

TEST_CASE("arc length follows the counterclockwise branch definition") {
  using EP = EllipticProblem;
  CHECK(EP::boundary_arc_length(0.0, 0.0) == 0.0);
  CHECK(EP::boundary_arc_length(0.5, 0.0) == 0.5);
  CHECK(EP::boundary_arc_length(1.0, 0.0) == 1.0);
  CHECK(EP::boundary_arc_length(1.0, 0.25) == 1.25);
  CHECK(EP::boundary_arc_length(1.0, 1.0) == 2.0);
  CHECK(EP::boundary_arc_length(0.5, 1.0) == 2.5);
  CHECK(EP::boundary_arc_length(0.0, 1.0) == 3.0);
  CHECK(EP::boundary_arc_length(0.0, 0.5) == 3.5);
  CHECK_THROWS_AS(EP::boundary_arc_length(0.5, 0.5), Error);
}

TEST_CASE("voltage profiles take the documented corner values") {
  EllipticProblem sys(small_options());
  // s = 0 at the origin: U_1 = cos(0) = 1
  CHECK(sys.boundary_profile_at(1, 0.0, 0.0) == Catch::Approx(1.0));
  // s = 1 at (1,0): U_0 = sin(pi/2) = 1
  CHECK(sys.boundary_profile_at(0, 1.0, 0.0) == Catch::Approx(1.0));
  // s = 3 at (0,1): U_0 = sin(3 pi/2) = -1
  CHECK(sys.boundary_profile_at(0, 0.0, 1.0) == Catch::Approx(-1.0));
  CHECK_THROWS_AS(sys.boundary_profile_at(4, 0.0, 0.0), Error);
  CHECK_THROWS_AS(sys.boundary_profile(99), Error);
}

TEST_CASE("unit coefficient with linear data gives the exact solution") {
  EllipticOptions opts = small_options(9, 2);
  opts.true_gamma = GammaProfile::constant(1.0);
  EllipticProblem sys(opts);

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(sys.n_interior());
  const auto sol = sys.solve_forward_nodal(
      ones, [](double, double) { return 1.0; },
      [](double x, double) { return x; });

  const int n = sys.grid_n();
  const double h = sys.grid_h();
  Index p = 0;
  for (int iy = 1; iy <= n; ++iy) {
    for (int ix = 1; ix <= n; ++ix, ++p) {
      CHECK(std::abs(sol.interior[p] - ix * h) <= 1e-10);
    }
  }

  const auto positions = sys.measurement_positions();
  for (std::size_t m = 0; m < positions.size(); ++m) {
    const auto [x, y] = positions[m];
    double expected = 0.0;
    if (x == 0.0) expected = -1.0;       // outward normal -e_x
    else if (x == 1.0) expected = 1.0;   // outward normal +e_x
    CHECK(std::abs(sol.flux[static_cast<Index>(m)] - expected) <= 1e-10);
  }
}

TEST_CASE("flux scales exactly with the coefficient") {
  EllipticProblem sys(small_options(9, 2));
  Rng rng(substream_seed(31, {2}));

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd gamma =
        wavy_gamma(sys, rng, 0.5).cwiseMax(0.2).cwiseMin(1.2);
    const auto base = sys.solve_forward_nodal(
        gamma, [](double, double) { return 1.0; },
        [&sys](double x, double y) { return sys.boundary_profile_at(0, x, y); });
    for (double c : {0.5, 2.0, 7.0}) {
      const auto scaled = sys.solve_forward_nodal(
          Eigen::VectorXd(c * gamma), [c](double, double) { return c; },
          [&sys](double x, double y) {
            return sys.boundary_profile_at(0, x, y);
          });
      CHECK((scaled.interior - base.interior).norm() <=
            1e-12 * (1.0 + base.interior.norm()));
      CHECK((scaled.flux - c * base.flux).norm() <=
            1e-12 * (1.0 + c * base.flux.norm()));
    }
  }
}

TEST_CASE("discrete maximum principle") {
  EllipticProblem sys(small_options(9, 4));
  Rng rng(substream_seed(8, {1}));
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::VectorXd gamma =
        wavy_gamma(sys, rng, 0.6).cwiseMax(0.15).cwiseMin(5.0);
    const auto sol = sys.solve_forward_nodal(gamma, 3);
    // profile values lie in [-1, 1]
    CHECK(sol.interior.maxCoeff() <= 1.0 + 1e-12);
    CHECK(sol.interior.minCoeff() >= -1.0 - 1e-12);
  }
}

TEST_CASE("fine-grid data differs from same-grid data but stays consistent") {
  EllipticOptions opts = small_options(15, 3);
  EllipticProblem sys(opts);

  const auto fine = sys.exact_data();
  const auto coarse = sys.coarse_grid_data();
  REQUIRE(fine.size() == coarse.size());
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const double rel =
        (fine[i] - coarse[i]).norm() / std::max(fine[i].norm(), 1e-300);
    CHECK(rel > 1e-6);   // the inverse-crime guard is active
    CHECK(rel <= 5e-2);  // but the two discretizations agree to leading order
  }
}

TEST_CASE("derivative and adjoint are linear in their second argument") {
  EllipticProblem sys(small_options(7, 2));
  const ParameterVector x0 = sys.domain_center();
  const ParameterVector zero_h = ParameterVector::Zero(sys.parameter_dim());
  const DataVector zero_r = DataVector::Zero(sys.data_dim(0));
  CHECK(sys.deriv_apply(0, x0, zero_h).norm() == 0.0);
  CHECK(sys.deriv_adjoint_apply(0, x0, zero_r).norm() == 0.0);
}

TEST_CASE("adjoint identity holds at 20 random triples") {
  EllipticProblem sys(small_options(9, 3));
  Rng rng(substream_seed(12, {4}));
  const Index dim = sys.parameter_dim();
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 20; ++trial) {
    ParameterVector x = sys.domain_center();
    ParameterVector dir(dim);
    for (Index j = 0; j < dim; ++j) dir[j] = rng.gaussian();
    x += (0.4 * sys.domain_radius() * rng.uniform01() / dir.norm()) * dir;

    ParameterVector h(dim);
    for (Index j = 0; j < dim; ++j) h[j] = rng.gaussian();
    DataVector r(sys.data_dim(0));
    for (Index j = 0; j < r.size(); ++j) r[j] = rng.gaussian();
    const int i = static_cast<int>(rng.next_u64() %
                                   static_cast<std::uint64_t>(sys.n_equations()));
    double lhs, rhs;
    try {
      lhs = inner(sys.deriv_apply(i, x, h), r);
      rhs = inner(h, sys.deriv_adjoint_apply(i, x, r));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::gamma_out_of_bounds) continue;
      throw;
    }
    CHECK(std::abs(lhs - rhs) <=
          1e-10 * std::max({std::abs(lhs), std::abs(rhs), 1.0}));
    ++checked;
  }
  REQUIRE(checked == 20);
}

TEST_CASE("finite differences confirm the derivative to first order") {
  EllipticProblem sys(small_options(9, 2));
  Rng rng(substream_seed(14, {7}));
  const Index dim = sys.parameter_dim();

  ParameterVector h(dim);
  for (Index j = 0; j < dim; ++j) h[j] = rng.gaussian();
  h *= 0.05 * sys.domain_radius() / h.norm();

  const ParameterVector x = sys.domain_center();
  const DataVector fx = sys.forward(0, x);
  const DataVector dfh = sys.deriv_apply(0, x, h);

  std::vector<double> log_eps, log_err;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const DataVector f_pert = sys.forward(0, x + eps * h);
    const double err = ((f_pert - fx) / eps - dfh).norm();
    REQUIRE(err > 0.0);
    log_eps.push_back(std::log(eps));
    log_err.push_back(std::log(err));
  }
  const double order = oracles::ls_slope(log_eps, log_err);
  CHECK(order >= 0.9);
}

TEST_CASE("coordinate maps are inverse isometries") {
  for (ParamNorm norm_kind : {ParamNorm::l2, ParamNorm::h1}) {
    EllipticOptions opts = small_options(7, 2);
    opts.param_norm = norm_kind;
    EllipticProblem sys(opts);
    Rng rng(substream_seed(3, {static_cast<std::uint64_t>(norm_kind)}));

    Eigen::VectorXd gamma(sys.n_interior());
    for (Index j = 0; j < gamma.size(); ++j) gamma[j] = rng.gaussian();

    const ParameterVector x = sys.to_solver(gamma);
    CHECK((sys.to_nodal(x) - gamma).norm() <= 1e-12 * (1.0 + gamma.norm()));

    // independent recomputation of the parameter norm
    const int n = sys.grid_n();
    const double h = sys.grid_h();
    double expected_sq = h * h * gamma.squaredNorm();
    if (norm_kind == ParamNorm::h1) {
      auto dof = [n](int ix, int iy) { return (ix - 1) + n * (iy - 1); };
      for (int iy = 1; iy <= n; ++iy) {
        for (int ix = 1; ix <= n; ++ix) {
          if (ix < n) {
            const double d = gamma[dof(ix, iy)] - gamma[dof(ix + 1, iy)];
            expected_sq += d * d;
          }
          if (iy < n) {
            const double d = gamma[dof(ix, iy)] - gamma[dof(ix, iy + 1)];
            expected_sq += d * d;
          }
        }
      }
    }
    CHECK(x.squaredNorm() == Catch::Approx(expected_sq).epsilon(1e-12));
  }
}

TEST_CASE("data embedding carries the trapezoidal boundary weights") {
  EllipticProblem sys(small_options(9, 2));
  const DataVector w = sys.measurement_weights();
  // total weight equals the perimeter
  CHECK(w.sum() == Catch::Approx(4.0).epsilon(1e-12));
  Rng rng(55);
  DataVector f(sys.n_measurements());
  for (Index j = 0; j < f.size(); ++j) f[j] = rng.gaussian();
  const DataVector embedded = sys.data_to_solver(f);
  CHECK(embedded.squaredNorm() ==
        Catch::Approx(f.cwiseProduct(w.cwiseProduct(f)).sum()).epsilon(1e-12));
  CHECK((sys.data_to_nodal(embedded) - f).norm() <= 1e-12 * f.norm());
}

TEST_CASE("harmonic extension reproduces constants and linear functions") {
  EllipticOptions opts = small_options(9, 2);
  opts.true_gamma = GammaProfile::constant(2.5);
  EllipticProblem sys(opts);

  // gamma0 is the harmonic extension of the constant trace
  const Eigen::VectorXd gamma0 = sys.initial_guess_nodal();
  CHECK((gamma0.array() - 2.5).abs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd linear =
      sys.harmonic_extension([](double x, double y) { return x + 2.0 * y; });
  const int n = sys.grid_n();
  const double h = sys.grid_h();
  Index p = 0;
  for (int iy = 1; iy <= n; ++iy) {
    for (int ix = 1; ix <= n; ++ix, ++p) {
      CHECK(std::abs(linear[p] - (ix * h + 2.0 * iy * h)) <= 1e-10);
    }
  }
}

TEST_CASE("coefficients outside the admissible box are rejected") {
  EllipticProblem sys(small_options(7, 2));
  Eigen::VectorXd gamma = Eigen::VectorXd::Ones(sys.n_interior());

  gamma[3] = 0.05;  // below gamma_min = 0.1
  CHECK_THROWS_AS(sys.solve_forward_nodal(gamma, 0), Error);
  try {
    sys.solve_forward_nodal(gamma, 0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::gamma_out_of_bounds);
  }

  gamma[3] = 11.0;  // above gamma_max = 10
  CHECK_THROWS_AS(sys.solve_forward_nodal(gamma, 0), Error);

  const ParameterVector outside =
      sys.domain_center() +
      2.0 * sys.domain_radius() *
          ParameterVector::Ones(sys.parameter_dim()).normalized();
  CHECK_THROWS_AS(sys.forward(0, outside), Error);
  try {
    sys.forward(0, outside);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::outside_domain_ball);
  }
}

TEST_CASE("construction rejects unusable options") {
  EllipticOptions opts;
  opts.grid_n = 2;
  CHECK_THROWS_AS(EllipticProblem(opts), Error);

  opts = small_options();
  opts.ball_radius_factor = 1.5;
  CHECK_THROWS_AS(EllipticProblem(opts), Error);

  opts = small_options();
  opts.gamma_min = 0.0;
  CHECK_THROWS_AS(EllipticProblem(opts), Error);

  opts = small_options();
  opts.true_gamma = GammaProfile::constant(50.0);  // outside the box
  CHECK_THROWS_AS(EllipticProblem(opts), Error);
}

TEST_CASE("cholesky and conjugate-gradient solves agree") {
  EllipticOptions opts = small_options(9, 2);
  opts.pde_solver = PdeSolver::cholesky;
  EllipticProblem chol(opts);
  opts.pde_solver = PdeSolver::conjugate_gradient;
  EllipticProblem cg(opts);

  const ParameterVector x = chol.domain_center();
  for (int i = 0; i < 2; ++i) {
    const DataVector a = chol.forward(i, x);
    const DataVector b = cg.forward(i, x);
    CHECK((a - b).norm() <= 1e-10 * (1.0 + a.norm()));
  }
}

TEST_CASE("problem construction is deterministic") {
  EllipticProblem a(small_options(7, 3));
  EllipticProblem b(small_options(7, 3));
  CHECK(a.derivative_bound() == b.derivative_bound());
  CHECK(a.domain_radius() == b.domain_radius());
  for (int i = 0; i < 3; ++i) {
    CHECK((a.exact_data()[static_cast<std::size_t>(i)] -
           b.exact_data()[static_cast<std::size_t>(i)])
              .norm() == 0.0);
  }
}

TEST_CASE("empirical tangential cone constant stays moderate locally") {
  EllipticProblem sys(small_options(9, 4));
  const auto estimate = problems::estimate_tcc_eta(sys, 10, 0.5, 31);
  CHECK(estimate.pairs_used > 0);
  CHECK(estimate.eta_hat < 1.0);
}
