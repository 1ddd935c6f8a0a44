#include <benchmark/benchmark.h>

#include "retmix/diagnostics.hpp"
#include "retmix/ecme.hpp"
#include "retmix/em.hpp"
#include "retmix/lp.hpp"
#include "retmix/rng.hpp"
#include "retmix/ruin.hpp"

using namespace retmix;

namespace {

std::vector<double> bench_data(int T) {
  UnivariateMixture gen({{0.4, -1.0, 0.7}, {0.6, 1.5, 0.9}});
  auto rng = make_stream(1);
  return sample_mixture(gen, T, rng);
}

struct BenchJoint {
  JointMixture model;
  ReturnsPanel panel;
};

BenchJoint bench_joint(int T) {
  std::vector<UnivariateMixture> marginals{
      UnivariateMixture({{0.4, -0.8, 0.5}, {0.6, 0.9, 0.6}}),
      UnivariateMixture({{0.7, 0.1, 0.6}, {0.3, 1.4, 0.4}})};
  StructureSolution s;
  s.probs = {0.3, 0.1, 0.25, 0.35};
  s.kept_cells = {0, 1, 2, 3};
  BenchJoint out;
  out.model = make_joint_mixture(marginals, s);
  auto rng = make_stream(2);
  out.panel = sample_joint(out.model, T, rng);
  return out;
}

}  // namespace

static void BM_EmFit(benchmark::State& state) {
  std::vector<double> data = bench_data(static_cast<int>(state.range(0)));
  EMConfig cfg;
  cfg.epsilon = 1e-9;
  auto rng = make_stream(3);
  UnivariateMixture seed = analytic_mle(data).mixture;
  UnivariateMixture start = random_start(data, 2, seed, cfg, rng);
  for (auto _ : state) benchmark::DoNotOptimize(em_fit(data, start, cfg));
}
BENCHMARK(BM_EmFit)->Arg(88)->Arg(500);

static void BM_MinSsdLp(benchmark::State& state) {
  std::vector<UnivariateMixture> marginals{
      UnivariateMixture({{0.3, -1.0, 0.5}, {0.7, 1.0, 0.5}}),
      UnivariateMixture({{0.5, -2.0, 0.5}, {0.5, 2.0, 0.5}})};
  AssignmentTable table;
  table.counts = {22, 18, 28, 32};
  table.probs = {0.22, 0.18, 0.28, 0.32};
  LPConfig cfg;
  cfg.ssd_segments = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(min_ssd_structure(table, marginals, cfg));
}
BENCHMARK(BM_MinSsdLp)->Arg(100)->Arg(500);

static void BM_Step2Gradient(benchmark::State& state) {
  BenchJoint bj = bench_joint(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(step2_gradient(bj.panel, bj.model));
}
BENCHMARK(BM_Step2Gradient)->Arg(88)->Arg(500);

static void BM_Step2Hessian(benchmark::State& state) {
  BenchJoint bj = bench_joint(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(step2_hessian(bj.panel, bj.model));
}
BENCHMARK(BM_Step2Hessian)->Arg(88)->Arg(500);

static void BM_SimulateRuin(benchmark::State& state) {
  BenchJoint bj = bench_joint(100);
  DecumulationPlan plan;
  plan.withdrawal_rate = 0.04;
  plan.horizon.fixed = true;
  plan.horizon.length = 30;
  plan.portfolio.weights = {0.6, 0.4};
  plan.portfolio.expenses = {0.001, 0.001};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        simulate_ruin(plan, bj.model, static_cast<int>(state.range(0)), 7, 1));
}
BENCHMARK(BM_SimulateRuin)->Arg(10000)->Arg(100000);

static void BM_Acf(benchmark::State& state) {
  std::vector<double> data = bench_data(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(acf(data, static_cast<int>(data.size()) / 4));
}
BENCHMARK(BM_Acf)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
