#include <benchmark/benchmark.h>

#include "aqe/kernels.hpp"
#include "aqe/nn.hpp"
#include "aqe/quadtag.hpp"
#include "aqe/rng.hpp"

namespace {

using namespace aqe;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix m(rows, cols);
  Rng rng(seed);
  nn::init_normal(m, rng, 1.0);
  return m;
}

void BM_GemmReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    kernels::reference::gemm(c, a, kernels::Trans::No, b, kernels::Trans::No);
    benchmark::DoNotOptimize(c.flat().data());
  }
}

void BM_GemmParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Matrix c(n, n);
  for (auto _ : state) {
    kernels::gemm(c, a, kernels::Trans::No, b, kernels::Trans::No);
    benchmark::DoNotOptimize(c.flat().data());
  }
}

void BM_ScoreTableReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix sentences = random_matrix(n + 1, 32, 3);
  BiaffineParams params(32, 16);
  Rng rng(4);
  params.init(rng);
  for (auto _ : state) benchmark::DoNotOptimize(reference::score_table(sentences, params));
}

void BM_ScoreTableParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix sentences = random_matrix(n + 1, 32, 3);
  BiaffineParams params(32, 16);
  Rng rng(4);
  params.init(rng);
  for (auto _ : state) benchmark::DoNotOptimize(score_table(sentences, params));
}

}  // namespace

BENCHMARK(BM_GemmReference)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_GemmParallel)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_ScoreTableReference)->Arg(16)->Arg(64);
BENCHMARK(BM_ScoreTableParallel)->Arg(16)->Arg(64);

BENCHMARK_MAIN();
