#include <benchmark/benchmark.h>

#include <sqmean/sqmean.hpp>

using namespace sqmean;

namespace {

Vector random_vector(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  Vector v(static_cast<Eigen::Index>(d));
  for (auto& e : v) e = g(rng);
  return v;
}

void BM_LpNorm(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Norm n = Norm::lp(d, 4.0);
  const Vector v = random_vector(d, 1);
  for (auto _ : state) benchmark::DoNotOptimize(n(v));
}
BENCHMARK(BM_LpNorm)->RangeMultiplier(4)->Range(16, 4096);

void BM_TopKNorm(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Norm n = Norm::top_k(d, 8);
  const Vector v = random_vector(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(n(v));
}
BENCHMARK(BM_TopKNorm)->RangeMultiplier(4)->Range(16, 4096);

void BM_SchattenNorm(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const Norm n = Norm::schatten(side, 4.0);
  const Vector v = random_vector(side * side, 3);
  for (auto _ : state) benchmark::DoNotOptimize(n(v));
}
BENCHMARK(BM_SchattenNorm)->DenseRange(4, 32, 4);

void BM_EllX(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const Norm n = Norm::lp(d, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(ell_X(n, 0.05));
}
BENCHMARK(BM_EllX)->RangeMultiplier(4)->Range(16, 4096);

void BM_T2HatExact(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<Vector> basis;
  for (std::size_t i = 0; i < n; ++i) basis.push_back(Vector::Unit(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)));
  const Norm l1 = Norm::lp(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(t2_hat(l1, basis, ExactSigns{}));
}
BENCHMARK(BM_T2HatExact)->DenseRange(8, 16, 4);

}  // namespace
