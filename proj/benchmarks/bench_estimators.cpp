#include <benchmark/benchmark.h>

#include <sqmean/sqmean.hpp>

using namespace sqmean;

namespace {

Distribution instance(std::size_t d, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g;
  std::vector<Vector> pts;
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(static_cast<Eigen::Index>(d));
    for (auto& e : v) e = g(rng);
    pts.push_back(v / (v.norm() * 1.01));
  }
  return Distribution::uniform(std::move(pts));
}

void BM_LinfEstimator(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto dist = instance(d, 32, 1);
  for (auto _ : state) {
    OracleSession s(dist, Stat{0.01}, HonestRandom{1});
    benchmark::DoNotOptimize(estimate_mean_linf(s, d, 0.01));
  }
}
BENCHMARK(BM_LinfEstimator)->RangeMultiplier(4)->Range(16, 1024);

void BM_L2Estimator(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto dist = instance(d, 32, 2);
  for (auto _ : state) {
    OracleSession s(dist, Stat{0.01}, HonestRandom{1});
    benchmark::DoNotOptimize(estimate_mean_l2(s, d, 0.01, 3));
  }
}
BENCHMARK(BM_L2Estimator)->RangeMultiplier(4)->Range(16, 1024);

void BM_SymmetricEstimator(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto dist = instance(d, 16, 3);
  const Norm n = Norm::lp(d, 4.0);
  const double eps = 0.1;
  const double t2 = std::sqrt(3.0);
  for (auto _ : state) {
    OracleSession s(dist, Stat{symmetric_tolerance(d, eps, t2)}, HonestRandom{1});
    benchmark::DoNotOptimize(estimate_mean_symmetric(s, n, d, eps, {t2, 1, false}).estimate);
  }
}
BENCHMARK(BM_SymmetricEstimator)->RangeMultiplier(4)->Range(16, 256)->Unit(benchmark::kMillisecond);

void BM_DiscriminationExact(benchmark::State& state) {
  const auto members = static_cast<std::size_t>(state.range(0));
  const auto w = basis_witness_lp(8, 1.0);
  const auto ref = build_reference(w);
  Rng rng(4);
  std::vector<Distribution> family;
  for (std::size_t m = 0; m < members; ++m) family.push_back(build_perturbed(w, random_signs(8, rng), 0.2));
  for (auto _ : state) benchmark::DoNotOptimize(discrimination_norm_exact(ref, family));
}
BENCHMARK(BM_DiscriminationExact)->DenseRange(4, 16, 4);

}  // namespace
BENCHMARK_MAIN();
