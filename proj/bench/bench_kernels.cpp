// Serial reference vs OpenMP kernels on the GEMM shapes of a forward pass.

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

#include "tokd/numeric/kernels.hpp"
#include "tokd/numeric/rng.hpp"

namespace k = tokd::kernels;

namespace {

struct Operands {
  std::vector<float> a, b, c;
  // sized for every layout: nn reads b [k, n], nt b [n, k], tn b [m, n] and writes c [k, n]
  Operands(std::size_t m, std::size_t n, std::size_t kk)
      : a(m * kk), b(std::max(m, kk) * n), c(std::max(m, kk) * n) {
    tokd::Rng rng(1);
    for (auto& v : a) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    for (auto& v : b) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  }
};

template <auto Gemm>
void bm_gemm(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto kk = static_cast<std::size_t>(state.range(2));
  Operands op(m, n, kk);
  for (auto _ : state) {
    Gemm(m, n, kk, op.a.data(), op.b.data(), op.c.data(), false);
    benchmark::DoNotOptimize(op.c.data());
    benchmark::ClobberMemory();
  }
  state.counters["flops"] = benchmark::Counter(2.0 * static_cast<double>(m * n * kk),
                                               benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

// tokens x width x width (qkv / ffn at desk scale), tokens x tokens x head (attention)
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({48, 192, 64})->Args({48, 256, 64})->Args({192, 768, 256})->Args({192, 192, 64})->Args({768, 1024, 256});
}

}  // namespace

BENCHMARK(bm_gemm<k::serial::gemm_nn<float>>)->Name("serial/gemm_nn")->Apply(shapes);
BENCHMARK(bm_gemm<k::parallel::gemm_nn<float>>)->Name("parallel/gemm_nn")->Apply(shapes);
BENCHMARK(bm_gemm<k::serial::gemm_nt<float>>)->Name("serial/gemm_nt")->Apply(shapes);
BENCHMARK(bm_gemm<k::parallel::gemm_nt<float>>)->Name("parallel/gemm_nt")->Apply(shapes);
BENCHMARK(bm_gemm<k::serial::gemm_tn<float>>)->Name("serial/gemm_tn")->Apply(shapes);
BENCHMARK(bm_gemm<k::parallel::gemm_tn<float>>)->Name("parallel/gemm_tn")->Apply(shapes);

BENCHMARK_MAIN();
