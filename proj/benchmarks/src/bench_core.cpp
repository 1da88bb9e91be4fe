#include <benchmark/benchmark.h>

#include <random>

#include "dphase/flux.hpp"
#include "dphase/problem.hpp"
#include "dphase/solver.hpp"

using namespace dphase;

namespace {

ProblemSpec square_problem(int cells) {
  const ProblemConfig cfg = load_problem_config(std::string(DPHASE_FIXTURES) + "/double_phase2d.cfg");
  return build_problem(cfg.with_mesh(cells, cfg.nt));
}

void BM_FluxValue(benchmark::State& state) {
  const FluxPoint fp = FluxPoint::regularized(3.0, 2.9, 0.7, 0.3, 1e-3);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  std::vector<SmallVector> xs(256, SmallVector(2));
  for (auto& x : xs) x << normal(rng), normal(rng);
  std::size_t k = 0;
  for (auto _ : state) benchmark::DoNotOptimize(flux_value(fp, xs[k++ % xs.size()]));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_FluxValue);

void BM_FluxJacobian(benchmark::State& state) {
  const FluxPoint fp = FluxPoint::regularized(3.0, 2.9, 0.7, 0.3, 1e-3);
  SmallVector xi(2);
  xi << 0.4, -1.3;
  for (auto _ : state) benchmark::DoNotOptimize(flux_jacobian(fp, xi));
}
BENCHMARK(BM_FluxJacobian);

void BM_Residual(benchmark::State& state) {
  const ProblemSpec spec = square_problem(static_cast<int>(state.range(0)));
  const DiscreteProblem problem(spec);
  const StepData data = problem.step_data(1, 1e-2);
  const Eigen::VectorXd u = spec.u0 * 0.9;
  for (auto _ : state) benchmark::DoNotOptimize(problem.residual(u, spec.u0, data));
  state.SetItemsProcessed(state.iterations() * u.size());
}
BENCHMARK(BM_Residual)->Arg(32)->Arg(64)->Arg(128);

void BM_NewtonStep(benchmark::State& state) {
  const ProblemSpec spec = square_problem(static_cast<int>(state.range(0)));
  const DiscreteProblem problem(spec);
  const NewtonConfig config;
  for (auto _ : state) {
    TimeStepState s;
    s.u_now = spec.u0;
    s.u_prev = spec.u0;
    s.step = 1;
    s.eps = 1e-2;
    benchmark::DoNotOptimize(newton_step(s, config, problem));
  }
}
BENCHMARK(BM_NewtonStep)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
