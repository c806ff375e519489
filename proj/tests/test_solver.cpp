#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "plwk/diagnostics.hpp"
#include "plwk/errors.hpp"
#include "plwk/harness/noise.hpp"
#include "plwk/problems/elliptic.hpp"
#include "plwk/problems/linear_block.hpp"
#include "plwk/rng.hpp"
#include "plwk/solver.hpp"
#include "plwk/step.hpp"

#include <cstring>
#include <set>

using namespace plwk;
using problems::LinearBlockProblem;
using problems::LinearBlockOptions;

namespace {

bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

bool same_bits(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

bool records_identical(const RunRecord& a, const RunRecord& b) {
  if (a.stop_index != b.stop_index || a.stop_reason != b.stop_reason) {
    return false;
  }
  if (a.steps.size() != b.steps.size() || a.cycles.size() != b.cycles.size()) {
    return false;
  }
  for (std::size_t s = 0; s < a.steps.size(); ++s) {
    const StepRecord& x = a.steps[s];
    const StepRecord& y = b.steps[s];
    if (x.k != y.k || x.i != y.i || x.omega != y.omega ||
        x.pde_solves != y.pde_solves ||
        !same_bits(x.residual_norm, y.residual_norm) ||
        !same_bits(x.theta, y.theta) || !same_bits(x.lambda, y.lambda) ||
        !same_bits(x.grad_norm, y.grad_norm) ||
        !same_bits(x.step_norm, y.step_norm) ||
        !same_bits(x.error_before, y.error_before) ||
        !same_bits(x.error_after, y.error_after)) {
      return false;
    }
  }
  for (std::size_t c = 0; c < a.cycles.size(); ++c) {
    const CycleRow& x = a.cycles[c];
    const CycleRow& y = b.cycles[c];
    if (x.cycle != y.cycle || x.skipped_steps != y.skipped_steps ||
        x.cum_pde_solves != y.cum_pde_solves ||
        !same_bits(x.error_ref, y.error_ref) ||
        !same_bits(x.residual_sum, y.residual_sum) ||
        !same_bits(x.residual_max, y.residual_max)) {
      return false;
    }
  }
  return bitwise_equal(a.final_iterate, b.final_iterate);
}

LinearBlockProblem default_problem(std::uint64_t seed = 1) {
  LinearBlockOptions opts;
  opts.n_blocks = 6;
  opts.n_unknowns = 20;
  opts.seed = seed;
  return LinearBlockProblem::random(opts);
}

SolverConfig default_config() {
  SolverConfig cfg;
  cfg.eta = 0.0;
  cfg.tau = 3.0;
  cfg.max_cycles = 200;
  return cfg;
}

}  // namespace

TEST_CASE("select_index is cyclic modulo N") {
  std::vector<int> identity{0, 1, 2};
  CHECK(select_index(IndexPolicy::cyclic, 5, 3, identity) == 2);
  CHECK(select_index(IndexPolicy::cyclic, 0, 3, identity) == 0);
  CHECK(select_index(IndexPolicy::cyclic, 7, 3, identity) == 1);
}

TEST_CASE("randomized cycles are seeded permutations") {
  const int n = 8;
  std::set<std::vector<int>> seen;
  for (std::int64_t cycle = 0; cycle < 10; ++cycle) {
    const auto order = cycle_order(IndexPolicy::randomized, 42, cycle, n);
    std::vector<bool> hit(static_cast<std::size_t>(n), false);
    for (int slot = 0; slot < n; ++slot) {
      const int i = select_index(IndexPolicy::randomized, cycle * n + slot, n, order);
      REQUIRE(i >= 0);
      REQUIRE(i < n);
      CHECK_FALSE(hit[static_cast<std::size_t>(i)]);
      hit[static_cast<std::size_t>(i)] = true;
    }
    seen.insert(order);
    CHECK(order == cycle_order(IndexPolicy::randomized, 42, cycle, n));
  }
  CHECK(seen.size() > 1);  // cycles draw independent permutations
}

TEST_CASE("both policies reduce to index 0 at N = 1") {
  std::vector<int> single{0};
  for (std::int64_t k = 0; k < 6; ++k) {
    CHECK(select_index(IndexPolicy::cyclic, k, 1, single) == 0);
    const auto order = cycle_order(IndexPolicy::randomized, 9, k, 1);
    CHECK(select_index(IndexPolicy::randomized, k, 1, order) == 0);
  }
}

TEST_CASE("a start below every threshold stops at k* = 0") {
  Eigen::MatrixXd a0(1, 2), a1(1, 2);
  a0 << 1.0, 0.0;
  a1 << 0.0, 1.0;
  ParameterVector x_star = ParameterVector::Zero(2);
  ParameterVector x0(2);
  x0 << 0.2, 0.25;
  LinearBlockProblem sys({a0, a1}, x_star, x0);

  NoisyObservations obs;
  obs.data = {DataVector::Zero(1), DataVector::Zero(1)};
  obs.noise_levels = {0.1, 0.1};  // residuals 0.2 and 0.25 are below 0.3

  const RunRecord rec =
      run(Method::make(MethodTag::plwk), sys, obs, default_config());
  CHECK(rec.stop_reason == StopReason::converged);
  CHECK(rec.stop_index == 0);
  for (const StepRecord& s : rec.steps) CHECK(s.omega == 0);
  CHECK(bitwise_equal(rec.final_iterate, x0));
}

TEST_CASE("exact-data run reproduces the classical Kaczmarz sweep") {
  const LinearBlockProblem sys = default_problem(3);
  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  SolverConfig cfg = default_config();
  cfg.max_cycles = 50;

  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg,
                            &sys.true_solution());

  // independent replay: project onto the active row's solution hyperplane
  ParameterVector x = sys.domain_center();
  std::size_t step_idx = 0;
  for (const StepRecord& s : rec.steps) {
    REQUIRE(s.i == static_cast<int>(step_idx % 6));
    const Eigen::VectorXd row = sys.block(s.i).row(0).transpose();
    const double rhs = (sys.block(s.i) * sys.true_solution())(0);
    const double residual = std::abs(row.dot(x) - rhs);
    CHECK(std::abs(residual - s.residual_norm) <=
          1e-12 * (1.0 + s.residual_norm));
    if (s.omega == 1) {
      x = oracles::project_row(x, row, rhs);
      // the active equation is solved exactly right after its step
      CHECK(std::abs(row.dot(x) - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }
    // errors to the reference never increase
    CHECK(s.error_after <= s.error_before * (1.0 + 1e-12));
    ++step_idx;
  }
  CHECK((x - rec.final_iterate).norm() <= 1e-10 * (1.0 + x.norm()));
}

TEST_CASE("runs are bitwise deterministic") {
  const LinearBlockProblem sys = default_problem(5);
  const NoisyObservations obs =
      harness::add_noise(sys.exact_data(), 2.0, 1234);
  SolverConfig cfg = default_config();
  cfg.rng_seed = 99;

  for (MethodTag tag : {MethodTag::plwk, MethodTag::plwkr, MethodTag::lwk,
                        MethodTag::lwkls}) {
    const RunRecord first =
        run(Method::make(tag), sys, obs, cfg, &sys.true_solution());
    const RunRecord second =
        run(Method::make(tag), sys, obs, cfg, &sys.true_solution());
    CHECK(records_identical(first, second));
  }
}

TEST_CASE("discrepancy stop is sound and every earlier cycle was active") {
  const LinearBlockProblem sys = default_problem(8);
  const NoisyObservations obs = harness::add_noise(sys.exact_data(), 2.0, 77);
  SolverConfig cfg = default_config();

  for (MethodTag tag : {MethodTag::plwk, MethodTag::plwkr}) {
    const RunRecord rec = run(Method::make(tag), sys, obs, cfg);
    REQUIRE(rec.stop_reason == StopReason::converged);
    CHECK(rec.stop_index % sys.n_equations() == 0);

    for (int i = 0; i < sys.n_equations(); ++i) {
      const double rn = (sys.forward(i, rec.final_iterate) -
                         obs.data[static_cast<std::size_t>(i)])
                            .norm();
      CHECK(rn <= cfg.tau * obs.noise_levels[static_cast<std::size_t>(i)]);
    }

    // rows 1..k*/N describe the cycles before the all-skip cycle
    const std::int64_t stop_cycle = rec.stop_index / sys.n_equations();
    for (std::int64_t c = 1; c <= stop_cycle; ++c) {
      CHECK(rec.cycles[static_cast<std::size_t>(c)].skipped_steps <
            sys.n_equations());
    }
    CHECK(rec.cycles.back().skipped_steps == sys.n_equations());
  }
}

TEST_CASE("PLWK and PLWKr coincide for a single equation") {
  LinearBlockOptions opts;
  opts.n_blocks = 1;
  opts.rows_per_block = 4;
  opts.n_unknowns = 6;
  opts.seed = 10;
  const LinearBlockProblem sys = LinearBlockProblem::random(opts);
  const NoisyObservations obs = harness::add_noise(sys.exact_data(), 1.0, 3);
  SolverConfig cfg = default_config();

  const RunRecord a = run(Method::make(MethodTag::plwk), sys, obs, cfg);
  const RunRecord b = run(Method::make(MethodTag::plwkr), sys, obs, cfg);
  CHECK(records_identical(a, b));
}

TEST_CASE("per-cycle rows count executed cycles plus the initial row") {
  const LinearBlockProblem sys = default_problem(4);
  const NoisyObservations obs = harness::add_noise(sys.exact_data(), 4.0, 12);
  const RunRecord rec =
      run(Method::make(MethodTag::plwk), sys, obs, default_config());
  CHECK(rec.cycles.size() ==
        rec.steps.size() / static_cast<std::size_t>(sys.n_equations()) + 1);
  for (std::size_t c = 0; c < rec.cycles.size(); ++c) {
    CHECK(rec.cycles[c].cycle == static_cast<std::int64_t>(c));
  }
}

TEST_CASE("monotonicity checker is clean on the linear problem") {
  const LinearBlockProblem sys = default_problem(6);
  const NoisyObservations obs = harness::add_noise(sys.exact_data(), 2.0, 5);
  SolverConfig cfg = default_config();
  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg,
                            &sys.true_solution());
  const MonotonicityReport report = check_monotonicity(rec, cfg, obs);
  CHECK(report.steps_checked > 0);
  CHECK(report.clean());
}

TEST_CASE("monotonicity checker flags misconfigured eta instead of failing") {
  // eta = 0 on a genuinely nonlinear problem: the step overshoots the
  // halfspace the theory guarantees, so the checker may flag violations;
  // either way it reports a well-formed summary.
  problems::EllipticOptions opts;
  opts.grid_n = 9;
  opts.n_experiments = 4;
  problems::EllipticProblem sys(opts);
  SolverConfig cfg;
  cfg.eta = 0.0;
  cfg.tau = 3.0;
  cfg.max_cycles = 60;
  const NoisyObservations obs =
      NoisyObservations::exact(sys.coarse_grid_data());
  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg,
                            &sys.reference());
  const MonotonicityReport report = check_monotonicity(rec, cfg, obs);
  CHECK(report.steps_checked > 0);
  if (report.violations > 0) {
    CHECK(report.first_violation_k >= 0);
    CHECK(report.worst_relative_excess > 0.0);
  } else {
    CHECK(report.first_violation_k == -1);
  }
}

TEST_CASE("monotonicity checker reports rather than throws without reference") {
  const LinearBlockProblem sys = default_problem(6);
  const NoisyObservations obs = harness::add_noise(sys.exact_data(), 2.0, 5);
  SolverConfig cfg = default_config();
  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg);
  const MonotonicityReport report = check_monotonicity(rec, cfg, obs);
  CHECK(report.steps_checked == 0);  // nothing recorded, nothing to flag
  CHECK(report.clean());
}

TEST_CASE("summability bounds hold at every prefix on exact data") {
  const LinearBlockProblem sys = default_problem(9);
  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  SolverConfig cfg = default_config();
  cfg.max_cycles = 200;
  cfg.residual_floor.reset();  // run the full budget

  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg,
                            &sys.true_solution());
  const SummabilityReport report =
      check_summability(rec, cfg, obs, sys.true_solution());
  CHECK(report.clean());
  CHECK(report.energy_sum <= report.energy_bound);
  CHECK(report.step_norm_sum <= 4.0 * report.energy_sum + 1e-12);

  // theta == 1, eta == 0: the bound constant is exactly ||x* - x0||^2
  const double dist2 =
      (sys.true_solution() - sys.domain_center()).squaredNorm();
  CHECK(report.energy_bound == Catch::Approx(dist2).epsilon(1e-14));
}

TEST_CASE("summability of a zero-iteration run is trivially bounded") {
  Eigen::MatrixXd a(1, 2);
  a << 1.0, 0.0;
  ParameterVector x_star = ParameterVector::Zero(2);
  ParameterVector x0(2);
  x0 << 0.0, 0.5;  // residual 0 for the single equation
  LinearBlockProblem sys({a}, x_star, x0);
  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  SolverConfig cfg = default_config();

  NoisyObservations solved;
  solved.data = {sys.forward(0, x0)};
  solved.noise_levels = {0.0};
  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, solved, cfg,
                            &sys.true_solution());
  CHECK(rec.stop_reason == StopReason::converged);
  const SummabilityReport report =
      check_summability(rec, cfg, solved, sys.true_solution());
  CHECK(report.clean());
  CHECK(report.energy_sum == 0.0);
}

TEST_CASE("summability checker rejects noisy runs") {
  const LinearBlockProblem sys = default_problem(2);
  const NoisyObservations obs = harness::add_noise(sys.exact_data(), 2.0, 8);
  SolverConfig cfg = default_config();
  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg);
  CHECK_THROWS_AS(check_summability(rec, cfg, obs, sys.true_solution()), Error);
}

TEST_CASE("LWK default step respects the classical scaling") {
  const LinearBlockProblem sys = default_problem(11);
  const Method lwk = Method::make(MethodTag::lwk);
  const double mu = lwk.resolved_lwk_mu(sys.derivative_bound());
  CHECK(mu * sys.derivative_bound() * sys.derivative_bound() ==
        Catch::Approx(0.9));

  // mu C^2 <= 1 keeps exact-data LWK monotone in the error
  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  SolverConfig cfg = default_config();
  cfg.max_cycles = 40;
  const RunRecord rec = run(lwk, sys, obs, cfg, &sys.true_solution());
  for (const StepRecord& s : rec.steps) {
    CHECK(s.error_after <= s.error_before * (1.0 + 1e-12));
  }
}

TEST_CASE("truncated elliptic run keeps lambda within its bounds") {
  problems::EllipticOptions opts;
  opts.grid_n = 9;
  opts.n_experiments = 4;
  problems::EllipticProblem sys(opts);
  const double c = sys.derivative_bound();

  SolverConfig cfg;
  cfg.eta = 0.45;
  cfg.tau = 3.0;
  cfg.max_cycles = 25;
  cfg.lambda_max = 5.0 * (1.0 - cfg.eta) / (c * c);
  const double lambda_min = (1.0 - cfg.eta) / (c * c);

  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg);
  int active = 0;
  int truncated = 0;
  for (const StepRecord& s : rec.steps) {
    if (s.omega == 0 || s.lambda == 0.0) continue;
    ++active;
    CHECK(s.lambda >= lambda_min * (1.0 - 1e-9));
    CHECK(s.lambda <= *cfg.lambda_max);
    if (s.lambda == *cfg.lambda_max) ++truncated;
  }
  CHECK(active > 0);
  CHECK(truncated > 0);  // the cap actually engages on this problem
}

TEST_CASE("exact data with residual floor reports the engineering stop") {
  const LinearBlockProblem sys = default_problem(14);
  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  SolverConfig cfg = default_config();
  cfg.max_cycles = 3000;
  cfg.residual_floor = 1e-12;

  const RunRecord rec = run(Method::make(MethodTag::plwk), sys, obs, cfg);
  CHECK((rec.stop_reason == StopReason::residual_floor ||
         rec.stop_reason == StopReason::max_cycles));
}
