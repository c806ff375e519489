#include "plwk/harness/noise.hpp"
#include "plwk/problems/elliptic.hpp"
#include "plwk/problems/linear_block.hpp"
#include "plwk/solver.hpp"
#include "plwk/step.hpp"

#include <benchmark/benchmark.h>

#include <memory>

using namespace plwk;
using namespace plwk::problems;

namespace {

std::shared_ptr<EllipticProblem> elliptic_fixture(int grid_n) {
  EllipticOptions opts;
  opts.grid_n = grid_n;
  opts.n_experiments = 12;
  return std::make_shared<EllipticProblem>(std::move(opts));
}

void BM_EllipticForward(benchmark::State& state) {
  const auto sys = elliptic_fixture(static_cast<int>(state.range(0)));
  // perturb gamma each iteration so the factorization cache misses,
  // measuring the full assemble + factorize + solve path
  ParameterVector x = sys->domain_center();
  double wiggle = 1e-6;
  for (auto _ : state) {
    x[0] += wiggle;
    wiggle = -wiggle;
    benchmark::DoNotOptimize(sys->forward(0, x));
  }
}
BENCHMARK(BM_EllipticForward)->Arg(15)->Arg(31)->Unit(benchmark::kMillisecond);

void BM_EllipticAdjoint(benchmark::State& state) {
  const auto sys = elliptic_fixture(static_cast<int>(state.range(0)));
  const ParameterVector x = sys->domain_center();
  DataVector r = DataVector::Ones(sys->data_dim(0));
  (void)sys->forward(0, x);  // warm the factorization cache
  for (auto _ : state) {
    benchmark::DoNotOptimize(sys->deriv_adjoint_apply(0, x, r));
  }
}
BENCHMARK(BM_EllipticAdjoint)->Arg(15)->Arg(31)->Unit(benchmark::kMillisecond);

void BM_PlwkCycleElliptic(benchmark::State& state) {
  const auto sys = elliptic_fixture(static_cast<int>(state.range(0)));
  const NoisyObservations obs = NoisyObservations::exact(sys->exact_data());
  SolverConfig cfg;
  cfg.eta = 0.45;
  cfg.tau = 3.0;
  cfg.max_cycles = 1;
  cfg.residual_floor.reset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run(Method::make(MethodTag::plwk), *sys, obs, cfg));
  }
}
BENCHMARK(BM_PlwkCycleElliptic)->Arg(15)->Arg(31)->Unit(benchmark::kMillisecond);

void BM_PlwkCycleLinear(benchmark::State& state) {
  LinearBlockOptions opts;
  opts.n_blocks = 6;
  opts.n_unknowns = static_cast<int>(state.range(0));
  opts.seed = 3;
  const LinearBlockProblem sys = LinearBlockProblem::random(opts);
  const NoisyObservations obs = NoisyObservations::exact(sys.exact_data());
  SolverConfig cfg;
  cfg.tau = 3.0;
  cfg.max_cycles = 1;
  cfg.residual_floor.reset();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run(Method::make(MethodTag::plwk), sys, obs, cfg));
  }
}
BENCHMARK(BM_PlwkCycleLinear)->Arg(40)->Arg(400);

void BM_StepKernelScalars(benchmark::State& state) {
  ParameterVector grad = ParameterVector::Ones(961);
  for (auto _ : state) {
    const double p = compute_p(1.7, 0.45, 0.02);
    benchmark::DoNotOptimize(compute_lambda(p, grad, 2.0));
  }
}
BENCHMARK(BM_StepKernelScalars);

}  // namespace

BENCHMARK_MAIN();
