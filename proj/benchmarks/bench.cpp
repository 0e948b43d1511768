#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "tsdm/dirichlet.hpp"
#include "tsdm/inner_em.hpp"
#include "tsdm/simplex_transform.hpp"

namespace {

using tsdm::DirichletParams;
using tsdm::Matrix;

Matrix mixture_data(std::size_t dim, std::size_t n, std::uint64_t seed) {
  Matrix out;
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> a(dim, 2.0);
    a[j % dim] = 20.0;
    const Matrix part = tsdm::sample(DirichletParams(a), seed + j, n / 3);
    for (std::size_t i = 0; i < part.rows(); ++i) out.append_row(part.row(i));
  }
  return out;
}

tsdm::InnerMixture three_components(std::size_t dim) {
  std::vector<DirichletParams> comps;
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> a(dim, 2.0);
    a[j % dim] = 20.0;
    comps.emplace_back(a);
  }
  return {{0.3, 0.3, 0.4}, comps};
}

void BM_LogDensity(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const DirichletParams p(std::vector<double>(dim, 3.0));
  const Matrix y = tsdm::sample(p, 1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(tsdm::log_density(p, y.row(0)));
}
BENCHMARK(BM_LogDensity)->Arg(3)->Arg(17);

void BM_MleWeighted(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix y = tsdm::sample(DirichletParams({4.0, 9.0, 2.0, 6.0, 1.5}), 2, n);
  std::vector<double> w(n);
  std::mt19937_64 rng(3);
  for (double& v : w) v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  for (auto _ : state) benchmark::DoNotOptimize(tsdm::mle_weighted(y, w));
}
BENCHMARK(BM_MleWeighted)->Arg(100)->Arg(1000)->Arg(10000);

void BM_EStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix y = mixture_data(8, n, 4);
  const auto m = three_components(8);
  for (auto _ : state) benchmark::DoNotOptimize(tsdm::e_step(m, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(y.rows()));
}
BENCHMARK(BM_EStep)->Arg(1000)->Arg(10000);

void BM_FitFixedJ(benchmark::State& state) {
  const Matrix y = mixture_data(5, static_cast<std::size_t>(state.range(0)), 5);
  tsdm::EmConfig em;
  em.seed = 6;
  em.n_starts = 3;
  for (auto _ : state) benchmark::DoNotOptimize(tsdm::fit_fixed_j(y, 3, em));
}
BENCHMARK(BM_FitFixedJ)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_TransformFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  Matrix raw;
  std::vector<std::string> names;
  for (int d = 0; d < 16; ++d) names.push_back("a" + std::to_string(d));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(16);
    for (double& v : row) v = z(rng);
    raw.append_row(row);
  }
  for (auto _ : state) {
    const auto t = tsdm::SimplexTransform::fit(raw, names);
    benchmark::DoNotOptimize(t.apply_batch(raw));
  }
}
BENCHMARK(BM_TransformFit)->Arg(1661)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
