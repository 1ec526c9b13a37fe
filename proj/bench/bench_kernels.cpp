// Serial reference vs OpenMP kernels at encoder width (768).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mft/kernels.hpp"
#include "mft/metrics.hpp"

namespace {

using mft::Matrix;
namespace k = mft::kernels;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = n(rng);
  return m;
}

template <void (*Fn)(const Matrix&, const Matrix&, const Matrix*, Matrix&)>
void BM_Affine(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto in = random_matrix(batch, 768, 1);
  const auto w = random_matrix(768, 768, 2);
  const auto b = random_matrix(768, 1, 3);
  Matrix out(batch, 768);
  for (auto _ : state) {
    Fn(in, w, &b, out);
    benchmark::DoNotOptimize(out.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * 768 * 768));
}

template <void (*Fn)(const Matrix&, const Matrix&, Matrix&)>
void BM_BackwardInput(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto g = random_matrix(batch, 768, 1);
  const auto w = random_matrix(768, 768, 2);
  Matrix out(batch, 768);
  for (auto _ : state) {
    Fn(g, w, out);
    benchmark::DoNotOptimize(out.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * 768 * 768));
}

template <void (*Fn)(const Matrix&, const Matrix&, Matrix&, Matrix*)>
void BM_Accumulate(benchmark::State& state) {
  const auto batch = static_cast<std::size_t>(state.range(0));
  const auto g = random_matrix(batch, 768, 1);
  const auto in = random_matrix(batch, 768, 2);
  Matrix gw(768, 768), gb(768, 1);
  for (auto _ : state) {
    Fn(g, in, gw, &gb);
    benchmark::DoNotOptimize(gw.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch * 768 * 768));
}

template <bool Parallel>
void BM_Bootstrap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::vector<int> p(n), g(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = static_cast<int>(rng() % 2);
    g[i] = static_cast<int>(rng() % 2);
  }
  for (auto _ : state) {
    const auto r = Parallel ? mft::metrics::bootstrap(p, g, mft::metrics::binary_f1_metric, 1000, 0)
                            : mft::metrics::bootstrap_serial(p, g, mft::metrics::binary_f1_metric, 1000, 0);
    benchmark::DoNotOptimize(r.std);
  }
}

}  // namespace

BENCHMARK(BM_Affine<k::serial::affine>)->Name("affine/serial")->Arg(16)->Arg(128);
BENCHMARK(BM_Affine<k::parallel::affine>)->Name("affine/parallel")->Arg(16)->Arg(128);
BENCHMARK(BM_BackwardInput<k::serial::affine_backward_input>)->Name("backward_input/serial")->Arg(16)->Arg(128);
BENCHMARK(BM_BackwardInput<k::parallel::affine_backward_input>)->Name("backward_input/parallel")->Arg(16)->Arg(128);
BENCHMARK(BM_Accumulate<k::serial::affine_accumulate>)->Name("accumulate/serial")->Arg(16)->Arg(128);
BENCHMARK(BM_Accumulate<k::parallel::affine_accumulate>)->Name("accumulate/parallel")->Arg(16)->Arg(128);
BENCHMARK(BM_Bootstrap<false>)->Name("bootstrap/serial")->Arg(200)->Arg(2000);
BENCHMARK(BM_Bootstrap<true>)->Name("bootstrap/parallel")->Arg(200)->Arg(2000);

BENCHMARK_MAIN();
