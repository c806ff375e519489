#include "plwk/problems/linear_block.hpp"

#include "plwk/errors.hpp"
#include "plwk/rng.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace plwk::problems {

double spectral_norm_power_iteration(const Eigen::MatrixXd& a,
                                     std::uint64_t seed, int max_iterations,
                                     double tolerance) {
  Rng rng(substream_seed(seed, {0x706f77}));
  Eigen::VectorXd v(a.cols());
  for (Index j = 0; j < v.size(); ++j) v[j] = rng.gaussian();
  v.normalize();

  double sigma_sq = 0;
  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (it > 0 && std::abs(next - sigma_sq) <= tolerance * std::abs(next)) {
      sigma_sq = next;
      break;
    }
    sigma_sq = next;
  }
  return std::sqrt(std::max(sigma_sq, 0.0));
}

LinearBlockProblem::LinearBlockProblem(std::vector<Eigen::MatrixXd> blocks,
                                       ParameterVector true_solution,
                                       ParameterVector x0,
                                       double ball_radius_factor)
    : blocks_(std::move(blocks)),
      x_star_(std::move(true_solution)),
      x0_(std::move(x0)) {
  if (blocks_.empty()) {
    raise(ErrorCode::invalid_config, "linear block problem needs >= 1 block");
  }
  for (const auto& a : blocks_) {
    if (a.cols() != x0_.size()) {
      raise(ErrorCode::dimension_mismatch,
            "block column count does not match the unknown dimension");
    }
  }
  if (x_star_.size() != x0_.size()) {
    raise(ErrorCode::dimension_mismatch, "true solution dimension mismatch");
  }
  if (!all_finite(x_star_) || !all_finite(x0_)) {
    raise(ErrorCode::invalid_config, "non-finite entries in problem vectors");
  }
  // A3 requires x* within rho/2 of x0; the factor must be >= 2.
  const double dist = (x_star_ - x0_).norm();
  rho_ = std::max(ball_radius_factor * dist, 1.0);

  double c = 0;
  for (const auto& a : blocks_) {
    c = std::max(c, spectral_norm_power_iteration(a));
  }
  derivative_bound_ = c;
}

LinearBlockProblem LinearBlockProblem::random(const LinearBlockOptions& opts) {
  if (opts.n_blocks < 1 || opts.rows_per_block < 1 || opts.n_unknowns < 1) {
    raise(ErrorCode::invalid_config, "linear block sizes must be positive");
  }
  if (!(opts.coherence >= 0.0) || !(opts.coherence < 1.0)) {
    raise(ErrorCode::invalid_config, "coherence must lie in [0, 1)");
  }

  const Index n = opts.n_unknowns;
  Rng rng(substream_seed(opts.seed, {0x626c6f636b73}));

  Eigen::VectorXd shared(n);
  for (Index j = 0; j < n; ++j) shared[j] = rng.gaussian();
  shared.normalize();

  const double c = opts.coherence;
  const double mix = std::sqrt(1.0 - c * c);

  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(static_cast<std::size_t>(opts.n_blocks));
  for (int i = 0; i < opts.n_blocks; ++i) {
    Eigen::MatrixXd a(opts.rows_per_block, n);
    for (int row = 0; row < opts.rows_per_block; ++row) {
      Eigen::VectorXd v(n);
      for (Index j = 0; j < n; ++j) v[j] = rng.gaussian();
      v -= v.dot(shared) * shared;
      v.normalize();
      const double scale =
          opts.row_scale_min +
          (opts.row_scale_max - opts.row_scale_min) * rng.uniform01();
      a.row(row) = (scale * (mix * v + c * shared)).transpose();
    }
    blocks.push_back(std::move(a));
  }

  ParameterVector x_star(n);
  for (Index j = 0; j < n; ++j) x_star[j] = rng.gaussian();
  ParameterVector x0 = ParameterVector::Zero(n);

  LinearBlockProblem problem(std::move(blocks), std::move(x_star),
                             std::move(x0));
  std::ostringstream note;
  note << "random(seed=" << opts.seed << ", coherence=" << opts.coherence
       << ")";
  problem.generator_note_ = note.str();
  return problem;
}

Index LinearBlockProblem::data_dim(int i) const {
  require_index(i, "data_dim");
  return blocks_[static_cast<std::size_t>(i)].rows();
}

const Eigen::MatrixXd& LinearBlockProblem::block(int i) const {
  require_index(i, "block");
  return blocks_[static_cast<std::size_t>(i)];
}

DataVector LinearBlockProblem::forward(int i, const ParameterVector& x) const {
  require_index(i, "forward");
  require_in_ball(x, "forward");
  return blocks_[static_cast<std::size_t>(i)] * x;
}

DataVector LinearBlockProblem::deriv_apply(int i, const ParameterVector& x,
                                           const ParameterVector& h) const {
  require_index(i, "deriv_apply");
  require_in_ball(x, "deriv_apply");
  return blocks_[static_cast<std::size_t>(i)] * h;
}

ParameterVector LinearBlockProblem::deriv_adjoint_apply(
    int i, const ParameterVector& x, const DataVector& r) const {
  require_index(i, "deriv_adjoint_apply");
  require_in_ball(x, "deriv_adjoint_apply");
  return blocks_[static_cast<std::size_t>(i)].transpose() * r;
}

std::vector<DataVector> LinearBlockProblem::exact_data() const {
  std::vector<DataVector> data;
  data.reserve(blocks_.size());
  for (const auto& a : blocks_) data.push_back(a * x_star_);
  return data;
}

std::string LinearBlockProblem::describe() const {
  std::ostringstream out;
  out << "problem = linear_block\n";
  out << "n_blocks = " << blocks_.size() << "\n";
  out << "rows_per_block = " << blocks_.front().rows() << "\n";
  out << "n_unknowns = " << x0_.size() << "\n";
  out << "derivative_bound = " << derivative_bound_ << "\n";
  out << "domain_radius = " << rho_ << "\n";
  if (!generator_note_.empty()) out << "generator = " << generator_note_ << "\n";
  return out.str();
}

}  // namespace plwk::problems
