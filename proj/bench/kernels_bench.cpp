// Serial reference vs OpenMP kernels.
//
//   larc_bench --benchmark_filter=matvec

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "larc/kernels.hpp"

namespace k = larc::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

template <bool Parallel>
void BM_Affine(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t in = 32, out = 16;
  const auto x = random_vec(rows * in, 1);
  const auto w = random_vec(in * out, 2);
  const auto b = random_vec(out, 3);
  std::vector<double> y(rows * out);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::affine(x, rows, in, w, b, out, y);
    else k::serial::affine(x, rows, in, w, b, out, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <bool Parallel>
void BM_MaskedMatvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_vec(n * n, 4);
  const auto s = random_vec(n, 5);
  std::vector<double> y(n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::masked_matvec(p, n, s, y);
    else k::serial::masked_matvec(p, n, s, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_MaskedBilinear(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto t = random_vec(n * n * n, 6);
  const auto s1 = random_vec(n, 7);
  const auto s2 = random_vec(n, 8);
  std::vector<double> y(n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::masked_bilinear(t, n, s1, s2, y);
    else k::serial::masked_bilinear(t, n, s1, s2, y);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_ComposeMax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_vec(n * n, 9);
  const auto b = random_vec(n * n, 10);
  std::vector<double> t(n * n * n);
  std::vector<std::uint8_t> branch(n * n * n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::compose_max(a, b, n, t, branch);
    else k::serial::compose_max(a, b, n, t, branch);
    benchmark::DoNotOptimize(t.data());
  }
}

template <bool Parallel>
void BM_PairInputs(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t attr_dim = 12;
  const auto attrs = random_vec(n * attr_dim, 11);
  const auto centers = random_vec(n * 3, 12);
  std::vector<double> rows(n * (n - 1) * (2 * attr_dim + k::kPairGeometry));
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::pair_inputs(attrs, n, attr_dim, centers, 1.0, rows);
    else k::serial::pair_inputs(attrs, n, attr_dim, centers, 1.0, rows);
    benchmark::DoNotOptimize(rows.data());
  }
}

}  // namespace

BENCHMARK(BM_Affine<false>)->Name("affine/serial")->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_Affine<true>)->Name("affine/parallel")->Arg(64)->Arg(1024)->Arg(8192);
BENCHMARK(BM_MaskedMatvec<false>)->Name("masked_matvec/serial")->Arg(16)->Arg(128)->Arg(512);
BENCHMARK(BM_MaskedMatvec<true>)->Name("masked_matvec/parallel")->Arg(16)->Arg(128)->Arg(512);
BENCHMARK(BM_MaskedBilinear<false>)->Name("masked_bilinear/serial")->Arg(8)->Arg(32)->Arg(64);
BENCHMARK(BM_MaskedBilinear<true>)->Name("masked_bilinear/parallel")->Arg(8)->Arg(32)->Arg(64);
BENCHMARK(BM_ComposeMax<false>)->Name("compose_max/serial")->Arg(8)->Arg(32)->Arg(64);
BENCHMARK(BM_ComposeMax<true>)->Name("compose_max/parallel")->Arg(8)->Arg(32)->Arg(64);
BENCHMARK(BM_PairInputs<false>)->Name("pair_inputs/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_PairInputs<true>)->Name("pair_inputs/parallel")->Arg(16)->Arg(64);

BENCHMARK_MAIN();
