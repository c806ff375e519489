#include "plwk/problems/elliptic.hpp"

#include "plwk/errors.hpp"
#include "plwk/rng.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace plwk::problems {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Eigen::VectorXd;

double harmonic_mean(double a, double b) { return 2.0 * a * b / (a + b); }

// Interior unknowns are the nodes (ix, iy) with 1 <= ix, iy <= n on the
// (n+2)x(n+2) node grid of the unit square; h = 1/(n+1).
struct Grid {
  int n;
  double h;

  Index n_interior() const { return static_cast<Index>(n) * n; }
  bool is_interior(int ix, int iy) const {
    return ix >= 1 && ix <= n && iy >= 1 && iy <= n;
  }
  Index dof(int ix, int iy) const {
    return (ix - 1) + static_cast<Index>(n) * (iy - 1);
  }
  // full-grid node id, used to index boundary-value arrays
  Index nid(int ix, int iy) const {
    return ix + static_cast<Index>(n + 2) * iy;
  }
  Index n_nodes() const {
    return static_cast<Index>(n + 2) * (n + 2);
  }
  double pos(int i) const { return h * i; }
};

constexpr int kNeighborDx[4] = {1, -1, 0, 0};
constexpr int kNeighborDy[4] = {0, 0, 1, -1};

// Boundary measurement node with its inward normal offset, counterclockwise
// along the boundary; the four corners are excluded (the normal direction is
// ambiguous there and the 5-point stencil never reads them).
struct Measurement {
  int bx, by;
  int dx, dy;
};

std::vector<Measurement> make_measurements(const Grid& g) {
  std::vector<Measurement> meas;
  meas.reserve(static_cast<std::size_t>(4 * g.n));
  for (int ix = 1; ix <= g.n; ++ix) meas.push_back({ix, 0, 0, 1});          // bottom
  for (int iy = 1; iy <= g.n; ++iy) meas.push_back({g.n + 1, iy, -1, 0});   // right
  for (int ix = g.n; ix >= 1; --ix) meas.push_back({ix, g.n + 1, 0, -1});   // top
  for (int iy = g.n; iy >= 1; --iy) meas.push_back({0, iy, 1, 0});          // left
  return meas;
}

double gamma_at(const Grid& g, const VectorXd& gamma_int,
                const VectorXd& gamma_bnd, int ix, int iy) {
  return g.is_interior(ix, iy) ? gamma_int[g.dof(ix, iy)]
                               : gamma_bnd[g.nid(ix, iy)];
}

SpMat assemble_matrix(const Grid& g, const VectorXd& gamma_int,
                      const VectorXd& gamma_bnd) {
  const double inv_h2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(5 * g.n_interior()));
  for (int iy = 1; iy <= g.n; ++iy) {
    for (int ix = 1; ix <= g.n; ++ix) {
      const Index p = g.dof(ix, iy);
      const double gp = gamma_int[p];
      double diag = 0;
      for (int nb = 0; nb < 4; ++nb) {
        const int jx = ix + kNeighborDx[nb];
        const int jy = iy + kNeighborDy[nb];
        const double kappa =
            harmonic_mean(gp, gamma_at(g, gamma_int, gamma_bnd, jx, jy));
        diag += kappa * inv_h2;
        if (g.is_interior(jx, jy)) {
          triplets.emplace_back(static_cast<int>(p),
                                static_cast<int>(g.dof(jx, jy)),
                                -kappa * inv_h2);
        }
      }
      triplets.emplace_back(static_cast<int>(p), static_cast<int>(p), diag);
    }
  }
  SpMat a(g.n_interior(), g.n_interior());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

VectorXd assemble_rhs(const Grid& g, const VectorXd& gamma_int,
                      const VectorXd& gamma_bnd, const VectorXd& u_bnd) {
  const double inv_h2 = 1.0 / (g.h * g.h);
  VectorXd b = VectorXd::Zero(g.n_interior());
  for (int iy = 1; iy <= g.n; ++iy) {
    for (int ix = 1; ix <= g.n; ++ix) {
      const Index p = g.dof(ix, iy);
      const double gp = gamma_int[p];
      for (int nb = 0; nb < 4; ++nb) {
        const int jx = ix + kNeighborDx[nb];
        const int jy = iy + kNeighborDy[nb];
        if (g.is_interior(jx, jy)) continue;
        const double kappa = harmonic_mean(gp, gamma_bnd[g.nid(jx, jy)]);
        b[p] += kappa * inv_h2 * u_bnd[g.nid(jx, jy)];
      }
    }
  }
  return b;
}

// Second-order one-sided co-normal flux gamma du/dnu at a measurement node.
double flux_at(const Grid& g, const VectorXd& gamma_bnd, const VectorXd& u_bnd,
               const VectorXd& u_int, const Measurement& m) {
  const double gb = gamma_bnd[g.nid(m.bx, m.by)];
  const double u0 = u_bnd[g.nid(m.bx, m.by)];
  const double u1 = u_int[g.dof(m.bx + m.dx, m.by + m.dy)];
  const double u2 = u_int[g.dof(m.bx + 2 * m.dx, m.by + 2 * m.dy)];
  return gb * (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * g.h);
}

// d(residual)/d(gamma_int) applied to a coefficient perturbation. The
// perturbation lives on interior nodes only; the boundary coefficient is
// known and fixed.
VectorXd apply_coeff_jacobian(const Grid& g, const VectorXd& gamma_int,
                              const VectorXd& gamma_bnd, const VectorXd& u_bnd,
                              const VectorXd& u_int, const VectorXd& dgamma) {
  const double inv_h2 = 1.0 / (g.h * g.h);
  VectorXd out = VectorXd::Zero(g.n_interior());
  for (int iy = 1; iy <= g.n; ++iy) {
    for (int ix = 1; ix <= g.n; ++ix) {
      const Index p = g.dof(ix, iy);
      const double gp = gamma_int[p];
      const double up = u_int[p];
      for (int nb = 0; nb < 4; ++nb) {
        const int jx = ix + kNeighborDx[nb];
        const int jy = iy + kNeighborDy[nb];
        const bool inter = g.is_interior(jx, jy);
        const double gq = inter ? gamma_int[g.dof(jx, jy)]
                                : gamma_bnd[g.nid(jx, jy)];
        const double uq = inter ? u_int[g.dof(jx, jy)] : u_bnd[g.nid(jx, jy)];
        const double t = (up - uq) * inv_h2;
        const double denom = (gp + gq) * (gp + gq);
        const double dk_dgp = 2.0 * gq * gq / denom;
        out[p] += dk_dgp * t * dgamma[p];
        if (inter) {
          const double dk_dgq = 2.0 * gp * gp / denom;
          out[p] += dk_dgq * t * dgamma[g.dof(jx, jy)];
        }
      }
    }
  }
  return out;
}

// Exact transpose of apply_coeff_jacobian (same directed-edge terms).
VectorXd apply_coeff_jacobian_t(const Grid& g, const VectorXd& gamma_int,
                                const VectorXd& gamma_bnd,
                                const VectorXd& u_bnd, const VectorXd& u_int,
                                const VectorXd& w) {
  const double inv_h2 = 1.0 / (g.h * g.h);
  VectorXd out = VectorXd::Zero(g.n_interior());
  for (int iy = 1; iy <= g.n; ++iy) {
    for (int ix = 1; ix <= g.n; ++ix) {
      const Index p = g.dof(ix, iy);
      const double gp = gamma_int[p];
      const double up = u_int[p];
      const double wp = w[p];
      for (int nb = 0; nb < 4; ++nb) {
        const int jx = ix + kNeighborDx[nb];
        const int jy = iy + kNeighborDy[nb];
        const bool inter = g.is_interior(jx, jy);
        const double gq = inter ? gamma_int[g.dof(jx, jy)]
                                : gamma_bnd[g.nid(jx, jy)];
        const double uq = inter ? u_int[g.dof(jx, jy)] : u_bnd[g.nid(jx, jy)];
        const double t = (up - uq) * inv_h2;
        const double denom = (gp + gq) * (gp + gq);
        const double dk_dgp = 2.0 * gq * gq / denom;
        out[p] += dk_dgp * t * wp;
        if (inter) {
          const double dk_dgq = 2.0 * gp * gp / denom;
          out[g.dof(jx, jy)] += dk_dgq * t * wp;
        }
      }
    }
  }
  return out;
}

// Isometry between nodal coefficient values and solver coordinates. For the
// H1 metric B = h^2 I + S (S the grid-gradient stiffness with natural
// boundary treatment), B = E^T E via sparse Cholesky and the maps below give
// <E u, E v> = u^T B v exactly; the adjoint map E^{-T} realizes the
// smoothing lift B^{-1} when composed with E^{-1}.
class MetricEmbedding {
 public:
  void init_scaled(double scale) {
    scaled_ = true;
    scale_ = scale;
  }

  void init_factorized(const SpMat& metric) {
    scaled_ = false;
    llt_.compute(metric);
    if (llt_.info() != Eigen::Success) {
      raise(ErrorCode::solve_failed, "parameter metric factorization failed");
    }
  }

  VectorXd to_solver(const VectorXd& v) const {
    if (scaled_) return scale_ * v;
    VectorXd pv = llt_.permutationP() * v;
    return llt_.matrixU() * pv;
  }

  VectorXd from_solver(const VectorXd& w) const {
    if (scaled_) return w / scale_;
    VectorXd y = llt_.matrixU().solve(w);
    return llt_.permutationPinv() * y;
  }

  VectorXd adjoint_from_nodal(const VectorXd& g) const {
    if (scaled_) return g / scale_;
    VectorXd pg = llt_.permutationP() * g;
    return llt_.matrixL().solve(pg);
  }

 private:
  bool scaled_ = true;
  double scale_ = 1.0;
  Eigen::SimplicialLLT<SpMat> llt_;
};

SpMat h1_metric(const Grid& g) {
  std::vector<Eigen::Triplet<double>> triplets;
  const double h2 = g.h * g.h;
  for (Index p = 0; p < g.n_interior(); ++p) {
    triplets.emplace_back(static_cast<int>(p), static_cast<int>(p), h2);
  }
  auto add_edge = [&](Index p, Index q) {
    triplets.emplace_back(static_cast<int>(p), static_cast<int>(p), 1.0);
    triplets.emplace_back(static_cast<int>(q), static_cast<int>(q), 1.0);
    triplets.emplace_back(static_cast<int>(p), static_cast<int>(q), -1.0);
    triplets.emplace_back(static_cast<int>(q), static_cast<int>(p), -1.0);
  };
  for (int iy = 1; iy <= g.n; ++iy) {
    for (int ix = 1; ix <= g.n; ++ix) {
      if (ix < g.n) add_edge(g.dof(ix, iy), g.dof(ix + 1, iy));
      if (iy < g.n) add_edge(g.dof(ix, iy), g.dof(ix, iy + 1));
    }
  }
  SpMat b(g.n_interior(), g.n_interior());
  b.setFromTriplets(triplets.begin(), triplets.end());
  return b;
}

}  // namespace

// ---------------------------------------------------------------------------
// GammaProfile

double GammaProfile::operator()(double x, double y) const {
  double value = background;
  for (const GammaBump& b : bumps) {
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    value += b.amplitude *
             std::exp(-(dx * dx + dy * dy) / (2.0 * b.radius * b.radius));
  }
  return value;
}

GammaProfile GammaProfile::constant(double value) {
  GammaProfile p;
  p.background = value;
  return p;
}

GammaProfile GammaProfile::default_two_bumps() {
  GammaProfile p;
  p.background = 1.0;
  p.bumps = {{0.3, 0.4, 2.0, 0.15}, {0.7, 0.6, 2.0, 0.15}};
  return p;
}

std::string GammaProfile::describe() const {
  std::ostringstream out;
  out << "background " << background;
  for (const GammaBump& b : bumps) {
    out << " + bump(cx=" << b.cx << ", cy=" << b.cy << ", amp=" << b.amplitude
        << ", radius=" << b.radius << ")";
  }
  return out.str();
}

const char* to_string(ParamNorm n) { return n == ParamNorm::l2 ? "l2" : "h1"; }

std::optional<ParamNorm> parse_param_norm(std::string_view name) {
  if (name == "l2") return ParamNorm::l2;
  if (name == "h1") return ParamNorm::h1;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// EllipticProblem::Impl

struct EllipticProblem::Impl {
  Grid grid{};
  VectorXd gamma_bnd;                // full-grid array, boundary entries used
  std::vector<VectorXd> dirichlet;   // per experiment, full-grid boundary
  std::vector<Measurement> meas;
  SpMat flux_lin;                    // d(flux)/d(u_int)
  std::vector<VectorXd> flux_const;  // per experiment
  MetricEmbedding metric;
  PdeSolver solver_kind = PdeSolver::cholesky;

  mutable std::mutex mutex;
  mutable struct {
    bool valid = false;
    VectorXd gamma;
    SpMat matrix;
    Eigen::SimplicialLLT<SpMat> llt;
    std::vector<std::optional<VectorXd>> u;
  } cache;

  // All cache access below assumes the caller holds `mutex`.
  void ensure_system(const VectorXd& gamma_int) const {
    if (cache.valid && cache.gamma.size() == gamma_int.size() &&
        (cache.gamma.array() == gamma_int.array()).all()) {
      return;
    }
    cache.valid = false;
    cache.gamma = gamma_int;
    cache.matrix = assemble_matrix(grid, gamma_int, gamma_bnd);
    if (solver_kind == PdeSolver::cholesky) {
      cache.llt.compute(cache.matrix);
      if (cache.llt.info() != Eigen::Success) {
        raise(ErrorCode::solve_failed, "Cholesky factorization failed");
      }
    }
    cache.u.assign(dirichlet.size(), std::nullopt);
    cache.valid = true;
  }

  VectorXd solve_cached(const VectorXd& rhs) const {
    VectorXd u;
    if (solver_kind == PdeSolver::cholesky) {
      u = cache.llt.solve(rhs);
    } else {
      Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
      cg.setTolerance(1e-13);
      cg.setMaxIterations(20 * cache.matrix.rows());
      cg.compute(cache.matrix);
      u = cg.solve(rhs);
    }
    const double rel = (cache.matrix * u - rhs).norm() /
                       std::max(rhs.norm(), 1e-300);
    if (rhs.norm() > 0 && rel > 1e-10) {
      raise(ErrorCode::solve_failed,
            "linear solve residual " + std::to_string(rel));
    }
    return u;
  }

  const VectorXd& u_for(int i) const {
    auto& slot = cache.u[static_cast<std::size_t>(i)];
    if (!slot) {
      const VectorXd b = assemble_rhs(grid, cache.gamma, gamma_bnd,
                                      dirichlet[static_cast<std::size_t>(i)]);
      slot = solve_cached(b);
    }
    return *slot;
  }

  DataVector flux_for(int i, const VectorXd& u) const {
    return flux_const[static_cast<std::size_t>(i)] + flux_lin * u;
  }
};

// ---------------------------------------------------------------------------
// construction

namespace {

double profile_u(int i, double s) {
  const double half_pi = std::numbers::pi / 2.0;
  const int pair = i / 2;
  const double arg = s * (pair + 1) * half_pi;
  return (i % 2 == 0) ? std::sin(arg) : std::cos(arg);
}

}  // namespace

double EllipticProblem::boundary_arc_length(double x, double y) {
  constexpr double tol = 1e-12;
  if (std::abs(y) <= tol && x < 1.0 - tol) return x;
  if (std::abs(x - 1.0) <= tol && y < 1.0 - tol) return 1.0 + y;
  if (std::abs(y - 1.0) <= tol && x > tol) return 3.0 - x;
  if (std::abs(x) <= tol && y > tol) return 4.0 - y;
  raise(ErrorCode::index_out_of_range,
        "point (" + std::to_string(x) + ", " + std::to_string(y) +
            ") is not on the unit-square boundary");
}

EllipticProblem::EllipticProblem(EllipticOptions opts)
    : opts_(std::move(opts)), impl_(std::make_unique<Impl>()) {
  if (opts_.grid_n < 3) {
    raise(ErrorCode::invalid_config,
          "grid_n must be >= 3 for the one-sided flux stencil");
  }
  if (opts_.n_experiments < 1) {
    raise(ErrorCode::invalid_config, "n_experiments must be positive");
  }
  if (!(opts_.gamma_min > 0.0) || !(opts_.gamma_max > opts_.gamma_min)) {
    raise(ErrorCode::invalid_config, "need 0 < gamma_min < gamma_max");
  }
  if (opts_.ball_radius_factor < 2.0) {
    raise(ErrorCode::invalid_config,
          "ball_radius_factor must be >= 2 so the target lies in B_{rho/2}");
  }

  const int n = opts_.grid_n;
  impl_->grid = Grid{n, 1.0 / (n + 1)};
  impl_->solver_kind = opts_.pde_solver;
  const Grid& g = impl_->grid;

  // boundary coefficient trace and Dirichlet profiles
  impl_->gamma_bnd = VectorXd::Zero(g.n_nodes());
  impl_->dirichlet.assign(static_cast<std::size_t>(opts_.n_experiments),
                          VectorXd::Zero(g.n_nodes()));
  auto for_each_boundary_node = [&](auto&& fn) {
    for (int ix = 0; ix <= n + 1; ++ix) {
      fn(ix, 0);
      fn(ix, n + 1);
    }
    for (int iy = 1; iy <= n; ++iy) {
      fn(0, iy);
      fn(n + 1, iy);
    }
  };
  for_each_boundary_node([&](int ix, int iy) {
    const double x = g.pos(ix);
    const double y = g.pos(iy);
    const double value = opts_.true_gamma(x, y);
    impl_->gamma_bnd[g.nid(ix, iy)] = value;
    const double s = boundary_arc_length(x, y);
    for (int i = 0; i < opts_.n_experiments; ++i) {
      impl_->dirichlet[static_cast<std::size_t>(i)][g.nid(ix, iy)] =
          profile_u(i, s);
    }
  });

  impl_->meas = make_measurements(g);
  const Index n_meas = static_cast<Index>(impl_->meas.size());

  // trapezoidal weights along the boundary polyline (corner nodes absent, so
  // the gap across each corner is 2h)
  meas_w_ = DataVector(n_meas);
  {
    std::vector<double> arcs(static_cast<std::size_t>(n_meas));
    for (Index m = 0; m < n_meas; ++m) {
      const Measurement& mm = impl_->meas[static_cast<std::size_t>(m)];
      arcs[static_cast<std::size_t>(m)] =
          boundary_arc_length(g.pos(mm.bx), g.pos(mm.by));
    }
    for (Index m = 0; m < n_meas; ++m) {
      const double prev =
          (m == 0) ? arcs[static_cast<std::size_t>(n_meas - 1)] - 4.0
                   : arcs[static_cast<std::size_t>(m - 1)];
      const double next = (m == n_meas - 1)
                              ? arcs[0] + 4.0
                              : arcs[static_cast<std::size_t>(m + 1)];
      meas_w_[m] = 0.5 * (next - prev);
    }
  }
  meas_sqrt_w_ = meas_w_.cwiseSqrt();

  // flux = flux_const[i] + flux_lin * u  (the boundary coefficient and the
  // Dirichlet data are fixed, so the flux map is affine in u)
  {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(2 * n_meas));
    for (Index m = 0; m < n_meas; ++m) {
      const Measurement& mm = impl_->meas[static_cast<std::size_t>(m)];
      const double gb = impl_->gamma_bnd[g.nid(mm.bx, mm.by)];
      const double coeff = gb / (2.0 * g.h);
      triplets.emplace_back(
          static_cast<int>(m),
          static_cast<int>(g.dof(mm.bx + mm.dx, mm.by + mm.dy)), -4.0 * coeff);
      triplets.emplace_back(
          static_cast<int>(m),
          static_cast<int>(g.dof(mm.bx + 2 * mm.dx, mm.by + 2 * mm.dy)),
          coeff);
    }
    impl_->flux_lin.resize(n_meas, g.n_interior());
    impl_->flux_lin.setFromTriplets(triplets.begin(), triplets.end());

    impl_->flux_const.assign(static_cast<std::size_t>(opts_.n_experiments),
                             VectorXd::Zero(n_meas));
    for (int i = 0; i < opts_.n_experiments; ++i) {
      for (Index m = 0; m < n_meas; ++m) {
        const Measurement& mm = impl_->meas[static_cast<std::size_t>(m)];
        const double gb = impl_->gamma_bnd[g.nid(mm.bx, mm.by)];
        const double u0 =
            impl_->dirichlet[static_cast<std::size_t>(i)][g.nid(mm.bx, mm.by)];
        impl_->flux_const[static_cast<std::size_t>(i)][m] =
            3.0 * gb * u0 / (2.0 * g.h);
      }
    }
  }

  // target coefficient and harmonic initial guess
  gamma_star_int_ = VectorXd(g.n_interior());
  for (int iy = 1; iy <= n; ++iy) {
    for (int ix = 1; ix <= n; ++ix) {
      gamma_star_int_[g.dof(ix, iy)] = opts_.true_gamma(g.pos(ix), g.pos(iy));
    }
  }
  require_gamma_admissible(gamma_star_int_);
  gamma0_int_ = harmonic_extension(
      [this](double x, double y) { return opts_.true_gamma(x, y); });
  require_gamma_admissible(gamma0_int_);

  // parameter metric and solver coordinates
  if (opts_.param_norm == ParamNorm::l2) {
    impl_->metric.init_scaled(g.h);
  } else {
    impl_->metric.init_factorized(h1_metric(g));
  }
  x0_ = impl_->metric.to_solver(gamma0_int_);
  x_star_ = impl_->metric.to_solver(gamma_star_int_);

  const double dist = (x_star_ - x0_).norm();
  rho_ = dist > 0 ? opts_.ball_radius_factor * dist : 1.0;

  // exact data on the refined grid, restricted to the coarse boundary nodes
  {
    const Grid fg{2 * n + 1, g.h / 2.0};
    VectorXd fine_gamma_int(fg.n_interior());
    for (int iy = 1; iy <= fg.n; ++iy) {
      for (int ix = 1; ix <= fg.n; ++ix) {
        fine_gamma_int[fg.dof(ix, iy)] =
            opts_.true_gamma(fg.pos(ix), fg.pos(iy));
      }
    }
    VectorXd fine_gamma_bnd = VectorXd::Zero(fg.n_nodes());
    std::vector<VectorXd> fine_dirichlet(
        static_cast<std::size_t>(opts_.n_experiments),
        VectorXd::Zero(fg.n_nodes()));
    auto fine_boundary = [&](auto&& fn) {
      for (int ix = 0; ix <= fg.n + 1; ++ix) {
        fn(ix, 0);
        fn(ix, fg.n + 1);
      }
      for (int iy = 1; iy <= fg.n; ++iy) {
        fn(0, iy);
        fn(fg.n + 1, iy);
      }
    };
    fine_boundary([&](int ix, int iy) {
      const double x = fg.pos(ix);
      const double y = fg.pos(iy);
      fine_gamma_bnd[fg.nid(ix, iy)] = opts_.true_gamma(x, y);
      const double s = boundary_arc_length(x, y);
      for (int i = 0; i < opts_.n_experiments; ++i) {
        fine_dirichlet[static_cast<std::size_t>(i)][fg.nid(ix, iy)] =
            profile_u(i, s);
      }
    });

    const SpMat fine_a = assemble_matrix(fg, fine_gamma_int, fine_gamma_bnd);
    Eigen::SimplicialLLT<SpMat> fine_llt(fine_a);
    if (fine_llt.info() != Eigen::Success) {
      raise(ErrorCode::solve_failed, "fine-grid factorization failed");
    }
    exact_data_.reserve(static_cast<std::size_t>(opts_.n_experiments));
    for (int i = 0; i < opts_.n_experiments; ++i) {
      const VectorXd b =
          assemble_rhs(fg, fine_gamma_int, fine_gamma_bnd,
                       fine_dirichlet[static_cast<std::size_t>(i)]);
      const VectorXd u = fine_llt.solve(b);
      const double rel = (fine_a * u - b).norm() / std::max(b.norm(), 1e-300);
      if (b.norm() > 0 && rel > 1e-10) {
        raise(ErrorCode::solve_failed, "fine-grid solve residual too large");
      }
      DataVector flux(n_meas);
      for (Index m = 0; m < n_meas; ++m) {
        const Measurement& cm = impl_->meas[static_cast<std::size_t>(m)];
        // the coarse boundary node (bx, by) coincides with (2bx, 2by) on the
        // fine grid; the flux stencil is taken on the fine grid
        const Measurement fm{2 * cm.bx, 2 * cm.by, cm.dx, cm.dy};
        flux[m] = flux_at(fg, fine_gamma_bnd,
                          fine_dirichlet[static_cast<std::size_t>(i)], u, fm);
      }
      exact_data_.push_back(meas_sqrt_w_.cwiseProduct(flux));
    }
  }

  // derivative bound estimate: power iteration per experiment at gamma0,
  // inflated by the safety factor since the bound must cover the whole ball
  {
    double max_sigma = 0;
    for (int i = 0; i < opts_.n_experiments; ++i) {
      Rng rng(substream_seed(0xe11u, {static_cast<std::uint64_t>(i)}));
      ParameterVector v(x0_.size());
      for (Index j = 0; j < v.size(); ++j) v[j] = rng.gaussian();
      v.normalize();
      double sigma_sq = 0;
      for (int it = 0; it < 40; ++it) {
        const ParameterVector w =
            deriv_adjoint_apply(i, x0_, deriv_apply(i, x0_, v));
        sigma_sq = v.dot(w);
        const double wn = w.norm();
        if (wn == 0) break;
        v = w / wn;
      }
      max_sigma = std::max(max_sigma, std::sqrt(std::max(sigma_sq, 0.0)));
    }
    derivative_bound_ = opts_.derivative_bound_safety * max_sigma;
  }
}

EllipticProblem::~EllipticProblem() = default;

// ---------------------------------------------------------------------------
// OperatorSystem surface

Index EllipticProblem::parameter_dim() const {
  return impl_->grid.n_interior();
}

Index EllipticProblem::data_dim(int i) const {
  require_index(i, "data_dim");
  return static_cast<Index>(impl_->meas.size());
}

double EllipticProblem::grid_h() const { return impl_->grid.h; }

Index EllipticProblem::n_interior() const { return impl_->grid.n_interior(); }

Index EllipticProblem::n_measurements() const {
  return static_cast<Index>(impl_->meas.size());
}

void EllipticProblem::require_gamma_admissible(
    const Eigen::VectorXd& gamma_interior) const {
  if (!all_finite(gamma_interior)) {
    raise(ErrorCode::gamma_out_of_bounds, "non-finite coefficient value");
  }
  const double lo = gamma_interior.minCoeff();
  const double hi = gamma_interior.maxCoeff();
  if (lo < opts_.gamma_min || hi > opts_.gamma_max) {
    raise(ErrorCode::gamma_out_of_bounds,
          "coefficient range [" + std::to_string(lo) + ", " +
              std::to_string(hi) + "] outside [" +
              std::to_string(opts_.gamma_min) + ", " +
              std::to_string(opts_.gamma_max) + "]");
  }
}

DataVector EllipticProblem::forward(int i, const ParameterVector& x) const {
  require_index(i, "forward");
  require_in_ball(x, "forward");
  const VectorXd gamma = impl_->metric.from_solver(x);
  require_gamma_admissible(gamma);
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->ensure_system(gamma);
  const VectorXd& u = impl_->u_for(i);
  return meas_sqrt_w_.cwiseProduct(impl_->flux_for(i, u));
}

DataVector EllipticProblem::deriv_apply(int i, const ParameterVector& x,
                                        const ParameterVector& h) const {
  require_index(i, "deriv_apply");
  require_in_ball(x, "deriv_apply");
  const VectorXd gamma = impl_->metric.from_solver(x);
  require_gamma_admissible(gamma);
  const VectorXd h_nodal = impl_->metric.from_solver(h);
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->ensure_system(gamma);
  const VectorXd& u = impl_->u_for(i);
  const VectorXd rhs = -apply_coeff_jacobian(
      impl_->grid, gamma, impl_->gamma_bnd,
      impl_->dirichlet[static_cast<std::size_t>(i)], u, h_nodal);
  const VectorXd du = impl_->solve_cached(rhs);
  return meas_sqrt_w_.cwiseProduct(DataVector(impl_->flux_lin * du));
}

ParameterVector EllipticProblem::deriv_adjoint_apply(
    int i, const ParameterVector& x, const DataVector& r) const {
  require_index(i, "deriv_adjoint_apply");
  require_in_ball(x, "deriv_adjoint_apply");
  const VectorXd gamma = impl_->metric.from_solver(x);
  require_gamma_admissible(gamma);
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->ensure_system(gamma);
  const VectorXd& u = impl_->u_for(i);
  const VectorXd r_nodal = meas_sqrt_w_.cwiseProduct(r);
  const VectorXd w =
      impl_->solve_cached(impl_->flux_lin.transpose() * r_nodal);
  const VectorXd g_nodal = -apply_coeff_jacobian_t(
      impl_->grid, gamma, impl_->gamma_bnd,
      impl_->dirichlet[static_cast<std::size_t>(i)], u, w);
  return impl_->metric.adjoint_from_nodal(g_nodal);
}

// ---------------------------------------------------------------------------
// nodal surface

double EllipticProblem::boundary_profile_at(int i, double x, double y) const {
  require_index(i, "boundary_profile");
  return profile_u(i, boundary_arc_length(x, y));
}

DataVector EllipticProblem::boundary_profile(int i) const {
  require_index(i, "boundary_profile");
  const Grid& g = impl_->grid;
  DataVector values(static_cast<Index>(impl_->meas.size()));
  for (std::size_t m = 0; m < impl_->meas.size(); ++m) {
    const Measurement& mm = impl_->meas[m];
    values[static_cast<Index>(m)] =
        impl_->dirichlet[static_cast<std::size_t>(i)][g.nid(mm.bx, mm.by)];
  }
  return values;
}

std::vector<std::pair<double, double>> EllipticProblem::measurement_positions()
    const {
  const Grid& g = impl_->grid;
  std::vector<std::pair<double, double>> pos;
  pos.reserve(impl_->meas.size());
  for (const Measurement& m : impl_->meas) {
    pos.emplace_back(g.pos(m.bx), g.pos(m.by));
  }
  return pos;
}

EllipticProblem::ForwardSolution EllipticProblem::solve_forward_nodal(
    const Eigen::VectorXd& gamma_interior, const BoundaryFn& gamma_boundary,
    const BoundaryFn& dirichlet_value) const {
  const Grid& g = impl_->grid;
  if (gamma_interior.size() != g.n_interior()) {
    raise(ErrorCode::dimension_mismatch, "gamma size != interior node count");
  }
  require_gamma_admissible(gamma_interior);

  VectorXd gamma_bnd = VectorXd::Zero(g.n_nodes());
  VectorXd u_bnd = VectorXd::Zero(g.n_nodes());
  auto visit = [&](int ix, int iy) {
    const double x = g.pos(ix);
    const double y = g.pos(iy);
    const double gb = gamma_boundary(x, y);
    if (!(gb >= opts_.gamma_min) || !(gb <= opts_.gamma_max)) {
      raise(ErrorCode::gamma_out_of_bounds,
            "boundary coefficient " + std::to_string(gb) + " out of range");
    }
    gamma_bnd[g.nid(ix, iy)] = gb;
    u_bnd[g.nid(ix, iy)] = dirichlet_value(x, y);
  };
  for (int ix = 0; ix <= g.n + 1; ++ix) {
    visit(ix, 0);
    visit(ix, g.n + 1);
  }
  for (int iy = 1; iy <= g.n; ++iy) {
    visit(0, iy);
    visit(g.n + 1, iy);
  }

  const SpMat a = assemble_matrix(g, gamma_interior, gamma_bnd);
  const VectorXd b = assemble_rhs(g, gamma_interior, gamma_bnd, u_bnd);
  VectorXd u;
  if (opts_.pde_solver == PdeSolver::cholesky) {
    Eigen::SimplicialLLT<SpMat> llt(a);
    if (llt.info() != Eigen::Success) {
      raise(ErrorCode::solve_failed, "Cholesky factorization failed");
    }
    u = llt.solve(b);
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(1e-13);
    cg.setMaxIterations(20 * a.rows());
    cg.compute(a);
    u = cg.solve(b);
  }
  const double rel = (a * u - b).norm() / std::max(b.norm(), 1e-300);
  if (b.norm() > 0 && rel > 1e-10) {
    raise(ErrorCode::solve_failed,
          "forward solve residual " + std::to_string(rel));
  }

  ForwardSolution sol;
  sol.flux = DataVector(static_cast<Index>(impl_->meas.size()));
  for (std::size_t m = 0; m < impl_->meas.size(); ++m) {
    sol.flux[static_cast<Index>(m)] =
        flux_at(g, gamma_bnd, u_bnd, u, impl_->meas[m]);
  }
  sol.interior = std::move(u);
  return sol;
}

EllipticProblem::ForwardSolution EllipticProblem::solve_forward_nodal(
    const Eigen::VectorXd& gamma_interior, int i) const {
  require_index(i, "solve_forward_nodal");
  return solve_forward_nodal(
      gamma_interior,
      [this](double x, double y) { return opts_.true_gamma(x, y); },
      [this, i](double x, double y) { return boundary_profile_at(i, x, y); });
}

Eigen::VectorXd EllipticProblem::harmonic_extension(
    const BoundaryFn& boundary_value) const {
  const Grid& g = impl_->grid;
  const VectorXd ones = VectorXd::Ones(g.n_interior());
  VectorXd unit_bnd = VectorXd::Zero(g.n_nodes());
  VectorXd u_bnd = VectorXd::Zero(g.n_nodes());
  auto visit = [&](int ix, int iy) {
    unit_bnd[g.nid(ix, iy)] = 1.0;
    u_bnd[g.nid(ix, iy)] = boundary_value(g.pos(ix), g.pos(iy));
  };
  for (int ix = 0; ix <= g.n + 1; ++ix) {
    visit(ix, 0);
    visit(ix, g.n + 1);
  }
  for (int iy = 1; iy <= g.n; ++iy) {
    visit(0, iy);
    visit(g.n + 1, iy);
  }
  const SpMat a = assemble_matrix(g, ones, unit_bnd);
  const VectorXd b = assemble_rhs(g, ones, unit_bnd, u_bnd);
  Eigen::SimplicialLLT<SpMat> llt(a);
  if (llt.info() != Eigen::Success) {
    raise(ErrorCode::solve_failed, "harmonic extension factorization failed");
  }
  VectorXd u = llt.solve(b);
  const double rel = (a * u - b).norm() / std::max(b.norm(), 1e-300);
  if (b.norm() > 0 && rel > 1e-10) {
    raise(ErrorCode::solve_failed, "harmonic extension residual too large");
  }
  return u;
}

std::vector<DataVector> EllipticProblem::coarse_grid_data() const {
  std::vector<DataVector> data;
  data.reserve(static_cast<std::size_t>(opts_.n_experiments));
  for (int i = 0; i < opts_.n_experiments; ++i) {
    data.push_back(
        data_to_solver(solve_forward_nodal(gamma_star_int_, i).flux));
  }
  return data;
}

// ---------------------------------------------------------------------------
// coordinate maps

ParameterVector EllipticProblem::to_solver(
    const Eigen::VectorXd& gamma_interior) const {
  return impl_->metric.to_solver(gamma_interior);
}

Eigen::VectorXd EllipticProblem::to_nodal(const ParameterVector& x) const {
  return impl_->metric.from_solver(x);
}

DataVector EllipticProblem::data_to_solver(const DataVector& nodal_flux) const {
  return meas_sqrt_w_.cwiseProduct(nodal_flux);
}

DataVector EllipticProblem::data_to_nodal(const DataVector& d) const {
  return d.cwiseQuotient(meas_sqrt_w_);
}

std::string EllipticProblem::describe() const {
  std::ostringstream out;
  out << "problem = elliptic\n";
  out << "grid_n = " << opts_.grid_n << "\n";
  out << "n_experiments = " << opts_.n_experiments << "\n";
  out << "gamma_min = " << opts_.gamma_min << "\n";
  out << "gamma_max = " << opts_.gamma_max << "\n";
  out << "param_norm = " << to_string(opts_.param_norm) << "\n";
  out << "pde_solver = "
      << (opts_.pde_solver == PdeSolver::cholesky ? "cholesky"
                                                  : "conjugate_gradient")
      << "\n";
  out << "true_gamma = " << opts_.true_gamma.describe() << "\n";
  out << "ball_radius_factor = " << opts_.ball_radius_factor << "\n";
  out << "domain_radius = " << rho_ << "\n";
  out << "derivative_bound = " << derivative_bound_ << "\n";
  return out.str();
}

}  // namespace plwk::problems
