// Serial reference vs OpenMP kernels at model-sized shapes.
// Args: N (rows). Widths follow the default network (d=20 -> 128 -> 256 -> 512).
#include <benchmark/benchmark.h>

#include "dfcn/graph.hpp"
#include "dfcn/kernels.hpp"
#include "dfcn/rng.hpp"

namespace {

using namespace dfcn;
using namespace dfcn::kernels;

Matrix filled(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_matrix(r, c, -1.0, 1.0, rng);
}

template <auto Kernel>
void bm_gemm_nn(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = filled(n, 256, 1), b = filled(256, 512, 2);
  Matrix c(n, 512);
  for (auto _ : st) {
    Kernel(a, b, c);
    benchmark::DoNotOptimize(c.data().data());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(n * 256 * 512));
}

template <auto Kernel>
void bm_gemm_nt(benchmark::State& st) {
  // Z Z^T, the self-correlation shape.
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix z = filled(n, 20, 3);
  Matrix c(n, n);
  for (auto _ : st) {
    Kernel(z, z, c);
    benchmark::DoNotOptimize(c.data().data());
  }
}

template <auto Kernel>
void bm_spmm(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  SbmSpec s;
  s.sizes = {n / 3, n / 3, n - 2 * (n / 3)};
  s.p_in = 20.0 / static_cast<double>(n);
  s.p_out = 1.0 / static_cast<double>(n);
  const GraphData g = sbm_synthesize(s);
  const Matrix h = filled(n, 256, 4);
  Matrix c(n, 256);
  for (auto _ : st) {
    Kernel(*g.adj_norm, h, c);
    benchmark::DoNotOptimize(c.data().data());
  }
}

template <auto Kernel>
void bm_pairwise(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = filled(n, 20, 5), b = filled(n, 20, 6);
  Matrix d(n, n);
  for (auto _ : st) {
    Kernel(a, b, d);
    benchmark::DoNotOptimize(d.data().data());
  }
}

#define DFCN_PAIR(bm, kernel)                                                          \
  BENCHMARK(bm<serial::kernel>)->Name(#kernel "/serial")->RangeMultiplier(4)->Range(256, 4096);   \
  BENCHMARK(bm<parallel::kernel>)->Name(#kernel "/parallel")->RangeMultiplier(4)->Range(256, 4096)

DFCN_PAIR(bm_gemm_nn, gemm_nn);
DFCN_PAIR(bm_gemm_nt, gemm_nt);
DFCN_PAIR(bm_spmm, spmm);
DFCN_PAIR(bm_pairwise, pairwise_sq_dist);

}  // namespace

BENCHMARK_MAIN();
