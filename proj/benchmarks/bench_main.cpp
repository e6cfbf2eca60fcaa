#include <benchmark/benchmark.h>

#include <vector>

#include "vamh/acf.hpp"
#include "vamh/bounds.hpp"
#include "vamh/glmm.hpp"
#include "vamh/random.hpp"
#include "vamh/toy.hpp"

namespace {

using namespace vamh;

void BM_PhiloxUniform(benchmark::State& state) {
  RandomStream rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng.uniform());
}
BENCHMARK(BM_PhiloxUniform);

void BM_ToyChainStep(benchmark::State& state) {
  ToyModel model;
  model.b_lo = 0.01;
  const auto kind = static_cast<ToySampler>(state.range(0));
  ToyChain chain(model, kind, {0.45, 0.0}, 10.0, 1.0, RandomStream(2, 0));
  for (auto _ : state) benchmark::DoNotOptimize(chain.advance());
}
BENCHMARK(BM_ToyChainStep)->Arg(0)->Arg(1);

void BM_GlmmChainStep(benchmark::State& state) {
  static const GlmmModel model = build_glmm_model(GlmmConfig{});
  const auto kind = static_cast<GlmmSampler>(state.range(0));
  RandomStream init(3, 1);
  GlmmChain chain(model, kind, glmm_initial_state(model, init), RandomStream(3, 0), 0.15,
                  std::vector<double>(model.q(), -2.0));
  for (auto _ : state) benchmark::DoNotOptimize(chain.advance());
}
BENCHMARK(BM_GlmmChainStep)->Arg(0)->Arg(1)->Arg(2);

void BM_Autocorrelation(benchmark::State& state) {
  RandomStream rng(4, 0);
  std::vector<double> g(static_cast<std::size_t>(state.range(0)));
  for (auto& v : g) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(autocorrelation(g, 100));
}
BENCHMARK(BM_Autocorrelation)->Arg(1 << 16)->Arg(1 << 20);

void BM_ExactCompositionKernel(benchmark::State& state) {
  DiscreteInstance inst;
  const auto k = static_cast<std::size_t>(state.range(0));
  inst.supports = {k, k};
  inst.pi.assign(k * k, 1.0 / double(k * k));
  inst.proposals = {std::vector<double>(k, 1.0 / double(k)), std::vector<double>(k, 1.0 / double(k))};
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_kernel_matrix(inst, DiscreteKernel::composition));
  }
}
BENCHMARK(BM_ExactCompositionKernel)->Arg(4)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
