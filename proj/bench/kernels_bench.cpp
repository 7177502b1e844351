// Serial reference against the OpenMP kernels on the hot loops of the
// harness: resolvent entries, raw moment sums and pair contractions.

#include <benchmark/benchmark.h>

#include "covlaw/ensembles.hpp"
#include "covlaw/kernels.hpp"
#include "covlaw/linalg.hpp"
#include "covlaw/resolvent.hpp"
#include "covlaw/rng.hpp"

using namespace covlaw;

namespace {

struct EntryFixture {
  Eigen::MatrixXd V;
  std::vector<kernels::cplx> w;
  kernels::cplx z{1.0, 0.01};
  kernels::IndexPairs pairs;

  explicit EntryFixture(std::size_t N) {
    const std::size_t r = N / 2;
    V = random_orthogonal_columns(N, r, 7);
    Stream rng(11);
    for (std::size_t a = 0; a < r; ++a) {
      const double s2 = 4.0 * rng.uniform();
      w.push_back(1.0 / (s2 - z) + 1.0 / z);
    }
    for (std::size_t p = 0; p < 4 * N; ++p) pairs.emplace_back(rng.next_u64() % N, rng.next_u64() % N);
  }
};

void BM_entries_serial(benchmark::State& st) {
  const EntryFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::sample_entries_serial(f.V, f.w, f.z, f.pairs));
}
void BM_entries_omp(benchmark::State& st) {
  const EntryFixture f(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::sample_entries_omp(f.V, f.w, f.z, f.pairs));
}

Eigen::MatrixXd moment_samples(std::size_t n, std::size_t reps) {
  Eigen::MatrixXd X(n, reps);
  Stream rng(3);
  for (std::size_t j = 0; j < reps; ++j)
    for (std::size_t i = 0; i < n; ++i) X(i, j) = rng.normal();
  return X;
}

void BM_moments_serial(benchmark::State& st) {
  const auto X = moment_samples(static_cast<std::size_t>(st.range(0)), 20000);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::raw_moments_serial(X, 4));
}
void BM_moments_omp(benchmark::State& st) {
  const auto X = moment_samples(static_cast<std::size_t>(st.range(0)), 20000);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::raw_moments_omp(X, 4));
}

std::vector<double> random_tensor(std::size_t size, std::uint64_t seed) {
  std::vector<double> t(size);
  Stream rng(seed);
  for (double& x : t) x = rng.normal();
  return t;
}

void BM_contract_serial(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(st.range(0));
  const auto A = random_tensor(n * n * n, 1), B = random_tensor(n * n * n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::contract_pair_serial(A, 3, B, 3, n, {{1, 0}}));
}
void BM_contract_omp(benchmark::State& st) {
  const std::size_t n = static_cast<std::size_t>(st.range(0));
  const auto A = random_tensor(n * n * n, 1), B = random_tensor(n * n * n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::contract_pair_omp(A, 3, B, 3, n, {{1, 0}}));
}

}  // namespace

BENCHMARK(BM_entries_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_entries_omp)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_moments_serial)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_moments_omp)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_contract_serial)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_contract_omp)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
