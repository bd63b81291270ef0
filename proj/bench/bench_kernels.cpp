// Serial against OpenMP kernels on the same inputs.

#include <benchmark/benchmark.h>

#include "polylab/ensembles.hpp"

using namespace polylab;

namespace {

const PotentialDistribution kHalf = PotentialDistribution::bernoulli(0.5, 1.0);

template <KernelMode Mode>
void quenched_table(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto env = Environment::sample(kHalf, default_dp_box(2, n), 7);
  const WeightParams p{1.0, 0.0, {0.5, 0, 0}};
  for (auto _ : state) benchmark::DoNotOptimize(quenched_dp(env, p, n, std::nullopt, Mode).log_total(n));
  state.SetItemsProcessed(state.iterations() * n);
}

template <KernelMode Mode>
void conjugate_sum(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  const Box box = Box::centered(2, r);
  const auto env = Environment::sample(kHalf, box, 11);
  const WeightParams p{1.0, 0.3, {}};
  const Point target{{r / 2, 0, 0}};
  ConjugateOptions opt;
  opt.mode = Mode;
  for (auto _ : state) benchmark::DoNotOptimize(conjugate_partition(&env, box, p, std::span(&target, 1), opt).log_value[0]);
}

}  // namespace

BENCHMARK(quenched_table<KernelMode::Serial>)->Arg(40)->Arg(120)->Unit(benchmark::kMillisecond);
BENCHMARK(quenched_table<KernelMode::Parallel>)->Arg(40)->Arg(120)->Unit(benchmark::kMillisecond);
BENCHMARK(conjugate_sum<KernelMode::Serial>)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(conjugate_sum<KernelMode::Parallel>)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
