#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "cyber0/data.hpp"
#include "cyber0/losses.hpp"
#include "cyber0/robust.hpp"
#include "cyber0/seedstream.hpp"
#include "cyber0/zo.hpp"

using namespace cyber0;

static void BM_PerturbInplace(benchmark::State& state) {
  const auto mode = state.range(1) == 0 ? DirectionMode::Gaussian : DirectionMode::Sphere;
  ParamVector w(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) {
    perturb_inplace(w, 1e-3, seed++, mode);
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PerturbInplace)->Args({7850, 0})->Args({7850, 1});

static void BM_DirectionBlock(benchmark::State& state) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(state.range(0)));
  std::iota(seeds.begin(), seeds.end(), 0);
  for (auto _ : state) benchmark::DoNotOptimize(make_direction_block(seeds, 7850, DirectionMode::Gaussian));
}
BENCHMARK(BM_DirectionBlock)->Arg(1)->Arg(64);

static void BM_TrimmedMean(benchmark::State& state) {
  GaussianStream g(1);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (double& x : v) x = g.next();
  for (auto _ : state) benchmark::DoNotOptimize(trimmed_mean(v, 0.25));
}
BENCHMARK(BM_TrimmedMean)->Arg(12)->Arg(40)->Arg(100);

static void BM_LogisticEvalPairs(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto data = synth_generate(1, 512, 784, 10);
  const LogisticRegression model(784, 10);
  std::vector<std::size_t> rows(64);
  std::iota(rows.begin(), rows.end(), 0);
  const Batch batch = make_batch(data, rows);
  const ParamVector w(model.dimension());
  std::vector<std::uint64_t> seeds(k);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto dirs = make_direction_block(seeds, model.dimension(), DirectionMode::Gaussian);
  std::vector<double> plus(k), minus(k);
  for (auto _ : state) {
    model.eval_pairs(w.span(), 1e-3, dirs, batch, plus, minus);
    benchmark::DoNotOptimize(plus.data());
  }
}
BENCHMARK(BM_LogisticEvalPairs)->Arg(1)->Arg(64);

static void BM_ApplyUpdateReplay(benchmark::State& state) {
  ZoConfig cfg;
  cfg.k = 64;
  ParamVector w(7850);
  const std::vector<double> coeffs(64, 0.5);
  std::int64_t step = 0;
  for (auto _ : state) {
    apply_update(w, coeffs, step++, 1e-3, cfg, 1);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK(BM_ApplyUpdateReplay);

BENCHMARK_MAIN();
