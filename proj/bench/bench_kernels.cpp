// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "wsol/kernels.hpp"
#include "wsol/localizer.hpp"
#include "wsol/rng.hpp"

namespace {

using namespace wsol;

std::vector<float> random_floats(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform());
  return v;
}

std::vector<double> random_doubles(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.uniform();
  return v;
}

template <auto Blur>
void BM_Blur(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const auto in = random_floats(static_cast<std::size_t>(side) * side * 3, 1);
  std::vector<float> out(in.size());
  const auto taps = kernels::gaussian_taps(side / 8.0);
  for (auto _ : state) {
    Blur(in, out, side, side, 3, taps);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * side * side);
}

template <auto Potts>
void BM_Potts(benchmark::State& state) {
  const int g = static_cast<int>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(g) * g;
  const auto features = random_doubles(n * 5, 2, 4.0);
  auto probs = random_doubles(n * 2, 3);
  for (std::size_t i = 0; i < n; ++i) probs[2 * i + 1] = 1.0 - probs[2 * i];
  for (auto _ : state) {
    auto r = Potts(features, 5, probs, 2);
    benchmark::DoNotOptimize(r.value);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

template <auto Mlp>
void BM_Mlp(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  const std::size_t n = static_cast<std::size_t>(side) * side;
  const auto params = LocalizerParams::seeded(4, 5);
  const auto features = random_doubles(n * kFeatureDim, 4);
  std::vector<double> probs(n * kChannels), hidden(n * kHiddenDim);
  for (auto _ : state) {
    Mlp(params, features, probs, hidden);
    benchmark::DoNotOptimize(probs.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

BENCHMARK(BM_Blur<kernels::serial::separable_blur>)->Name("blur/serial")->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(BM_Blur<kernels::parallel::separable_blur>)->Name("blur/parallel")->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(BM_Potts<kernels::serial::dense_potts>)->Name("dense_potts/serial")->Arg(16)->Arg(32)->UseRealTime();
BENCHMARK(BM_Potts<kernels::parallel::dense_potts>)->Name("dense_potts/parallel")->Arg(16)->Arg(32)->UseRealTime();
BENCHMARK(BM_Mlp<kernels::serial::mlp_forward>)->Name("mlp_forward/serial")->Arg(64)->Arg(256)->UseRealTime();
BENCHMARK(BM_Mlp<kernels::parallel::mlp_forward>)->Name("mlp_forward/parallel")->Arg(64)->Arg(256)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
