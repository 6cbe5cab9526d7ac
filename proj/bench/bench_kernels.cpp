// Serial reference kernels against the OpenMP versions.
#include <benchmark/benchmark.h>

#include "smin/dense.hpp"
#include "smin/rng.hpp"
#include "smin/serial_reference.hpp"
#include "smin/sparse.hpp"

namespace {

smin::DenseMatrix random_dense(std::size_t r, std::size_t c, std::uint64_t seed) {
  smin::Rng rng(seed);
  smin::DenseMatrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

smin::SparseMatrix random_sparse(std::size_t r, std::size_t c, double density, std::uint64_t seed) {
  smin::Rng rng(seed);
  std::vector<smin::Triplet> t;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (rng.bernoulli(density)) t.push_back({i, j, rng.uniform(0.5, 1.5)});
  return smin::SparseMatrix::from_triplets(r, c, std::move(t));
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_dense(n, 64, 1), b = random_dense(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(smin::serial::matmul(a, b));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_dense(n, 64, 1), b = random_dense(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(smin::matmul(a, b));
}

void BM_SpmmSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_sparse(n, n, 0.01, 3);
  const auto b = random_dense(n, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(smin::serial::spmm(a, b));
}

void BM_SpmmParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_sparse(n, n, 0.01, 3);
  const auto b = random_dense(n, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(smin::spmm(a, b));
}

// X·Xᵀ on a user-item matrix, the product behind UIU.
void BM_SpgemmSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_sparse(n, 2 * n, 0.01, 5);
  const auto xt = x.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(smin::serial::spgemm(x, xt));
}

void BM_SpgemmParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_sparse(n, 2 * n, 0.01, 5);
  const auto xt = x.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(smin::spgemm(x, xt));
}

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(256)->Arg(2048)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MatmulParallel)->Arg(256)->Arg(2048)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpmmSerial)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpmmParallel)->Arg(1000)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpgemmSerial)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpgemmParallel)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
