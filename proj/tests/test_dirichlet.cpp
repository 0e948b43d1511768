#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "oracle_values.hpp"
#include "tsdm/dirichlet.hpp"
#include "tsdm/errors.hpp"

using namespace tsdm;

namespace {

double log_density_v(std::vector<double> a, std::vector<double> y) {
  return log_density(DirichletParams(std::move(a)), y);
}

}  // namespace

TEST_CASE("log_density examples") {
  CHECK(log_density_v({1, 1, 1}, {0.2, 0.3, 0.5}) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(log_density_v({2, 2}, {0.5, 0.5}) == doctest::Approx(std::log(1.5)).epsilon(1e-14));
  CHECK(log_density_v({5, 1, 1}, {0.9, 0.05, 0.05}) ==
        doctest::Approx(oracle::kLogDensity511).epsilon(1e-13));
  CHECK(log_density_v({2, 3, 4}, {0.2, 0.3, 0.5}) ==
        doctest::Approx(oracle::kLogDensity234).epsilon(1e-13));
  CHECK(log_density_v({0.5, 0.5, 0.5, 0.5}, {0.1, 0.2, 0.3, 0.4}) ==
        doctest::Approx(oracle::kLogDensityHalf4).epsilon(1e-13));
}

TEST_CASE("log_density rejects invalid input") {
  CHECK_THROWS_AS(DirichletParams({1.0}), ValidationError);
  CHECK_THROWS_AS(DirichletParams({1.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(DirichletParams({1.0, -2.0}), ValidationError);
  CHECK_THROWS_AS(log_density_v({1, 1}, {0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(log_density_v({1, 1, 1}, {0.5, 0.5}), ValidationError);
  CHECK_THROWS_AS(log_density_v({1, 1}, {1.2, -0.2}), ValidationError);
}

TEST_CASE("boundary coordinates are clamped, not infinite") {
  const double v = log_density_v({2, 2, 2}, {0.0, 0.5, 0.5});
  CHECK(std::isfinite(v));
}

TEST_CASE("log_density integrates to one") {
  // Importance sampling from the uniform Dirichlet, whose density is (D-1)!.
  for (std::size_t dim : {2u, 3u, 5u}) {
    const std::vector<double> a = dim == 2 ? std::vector<double>{2.5, 4.0}
                                           : std::vector<double>(dim, 1.7);
    const DirichletParams p(a);
    const Matrix u = testing::random_simplex_points(200000, dim, 11);
    const double log_uniform = std::lgamma(static_cast<double>(dim));
    double acc = 0.0;
    for (std::size_t i = 0; i < u.rows(); ++i) acc += std::exp(log_density(p, u.row(i)) - log_uniform);
    CAPTURE(dim);
    CHECK(acc / u.rows() == doctest::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("sampling") {
  SUBCASE("symmetric mean") {
    const Matrix s = sample(DirichletParams({1, 1}), 3, 10000);
    const auto c = s.column(0);
    CHECK(std::accumulate(c.begin(), c.end(), 0.0) / c.size() == doctest::Approx(0.5).epsilon(0.04));
  }
  SUBCASE("asymmetric mean") {
    const Matrix s = sample(DirichletParams({8, 2}), 3, 10000);
    const auto c = s.column(0);
    CHECK(std::abs(std::accumulate(c.begin(), c.end(), 0.0) / c.size() - 0.8) < 0.02);
  }
  SUBCASE("deterministic per seed") {
    CHECK(sample(DirichletParams({3, 3, 3}), 42, 500) == sample(DirichletParams({3, 3, 3}), 42, 500));
  }
  SUBCASE("small alpha stays on the simplex") {
    const Matrix s = sample(DirichletParams({0.05, 0.1, 0.2}), 9, 2000);
    for (std::size_t i = 0; i < s.rows(); ++i) {
      double sum = 0.0;
      for (double v : s.row(i)) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("mle_weighted recovers generating parameters") {
  const Matrix s = sample(DirichletParams({2, 5, 3}), 17, 5000);
  const std::vector<double> w(s.rows(), 1.0);
  const DirichletParams fit = mle_weighted(s, w);
  const double truth[] = {2, 5, 3};
  for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(fit[d] / truth[d] - 1.0) < 0.05);

  SUBCASE("coordinate-ascent oracle on the weighted log-likelihood") {
    // Independent optimizer: cyclic golden-section line search on each
    // coordinate of log alpha.
    const WeightedLogStats stats = weighted_log_stats(log_coordinates(s), w);
    std::vector<double> a{1, 1, 1};
    auto f = [&](const std::vector<double>& v) { return mean_log_likelihood(DirichletParams(v), stats); };
    for (int sweep = 0; sweep < 60; ++sweep) {
      for (std::size_t d = 0; d < 3; ++d) {
        double lo = std::log(a[d]) - 2, hi = std::log(a[d]) + 2;
        const double g = (std::sqrt(5.0) - 1) / 2;
        for (int k = 0; k < 80; ++k) {
          const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
          auto a1 = a, a2 = a;
          a1[d] = std::exp(m1);
          a2[d] = std::exp(m2);
          if (f(a1) < f(a2)) lo = m1; else hi = m2;
        }
        a[d] = std::exp((lo + hi) / 2);
      }
    }
    for (std::size_t d = 0; d < 3; ++d) CHECK(fit[d] == doctest::Approx(a[d]).epsilon(1e-4));
  }
}

TEST_CASE("mle error shrinks with sample size") {
  const std::vector<double> truth{3, 1.5, 6};
  double err_small = 0.0, err_large = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (std::size_t n : {500u, 5000u}) {
      const Matrix s = sample(DirichletParams(truth), 100 + seed, n);
      const DirichletParams fit = mle_weighted(s, std::vector<double>(n, 1.0));
      double e = 0.0;
      for (std::size_t d = 0; d < 3; ++d) e += std::abs(fit[d] - truth[d]) / truth[d];
      (n == 500 ? err_small : err_large) += e;
    }
  }
  CHECK(err_large < err_small);
}

TEST_CASE("mle symmetry, zero weights and scale invariance") {
  SUBCASE("two mirrored points") {
    const Matrix m = Matrix::from_rows({{0.3, 0.7}, {0.7, 0.3}});
    const DirichletParams fit = mle_weighted(m, std::vector<double>{1, 1});
    CHECK(fit[0] == doctest::Approx(fit[1]).epsilon(1e-10));
  }
  const Matrix s = sample(DirichletParams({4, 2, 3}), 5, 400);
  std::vector<double> w(400, 1.0);
  SUBCASE("zero weights exclude points") {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < 400; ++i) {
      if (i % 3 == 0) w[i] = 0.0; else keep.push_back(i);
    }
    const DirichletParams a = mle_weighted(s, w);
    const DirichletParams b = mle_weighted(s.select_rows(keep), std::vector<double>(keep.size(), 1.0));
    for (std::size_t d = 0; d < 3; ++d) CHECK(a[d] == doctest::Approx(b[d]).epsilon(1e-10));
  }
  SUBCASE("weight scale does not matter") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (auto& v : w) v = u(rng);
    std::vector<double> w2 = w;
    for (auto& v : w2) v *= 37.5;
    const DirichletParams a = mle_weighted(s, w);
    const DirichletParams b = mle_weighted(s, w2);
    for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(a[d] - b[d]) <= 1e-8 * a[d]);
  }
}

TEST_CASE("mle stationarity: analytic gradient vanishes and matches finite differences") {
  const Matrix s = sample(DirichletParams({1.2, 7, 0.6, 3}), 23, 800);
  std::vector<double> w(800);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (auto& v : w) v = u(rng);
  const WeightedLogStats stats = weighted_log_stats(log_coordinates(s), w);
  const DirichletParams fit = mle_weighted(s, w);
  const auto g = mean_log_likelihood_gradient(fit.alpha(), stats);
  for (double v : g) CHECK(std::abs(v) <= 1e-6);

  // At a non-stationary point the analytic gradient agrees with differences.
  std::vector<double> a(fit.alpha().begin(), fit.alpha().end());
  for (auto& v : a) v *= 1.3;
  const auto ga = mean_log_likelihood_gradient(a, stats);
  for (std::size_t d = 0; d < a.size(); ++d) {
    auto hi = a, lo = a;
    hi[d] += 1e-5;
    lo[d] -= 1e-5;
    const double fd = (mean_log_likelihood(DirichletParams(hi), stats) -
                       mean_log_likelihood(DirichletParams(lo), stats)) / 2e-5;
    CHECK(fd == doctest::Approx(ga[d]).epsilon(1e-3));
  }
}

TEST_CASE("mle degenerate samples") {
  const Matrix one = Matrix::from_rows({{0.2, 0.8}});
  CHECK_THROWS_AS(mle_weighted(one, std::vector<double>{1.0}), DegenerateDataError);
  const Matrix s = sample(DirichletParams({2, 2}), 1, 10);
  CHECK_THROWS_AS(mle_weighted(s, std::vector<double>(10, 0.0)), DegenerateDataError);
  const Matrix same = Matrix::from_rows({{0.3, 0.7}, {0.3, 0.7}, {0.3, 0.7}});
  CHECK_THROWS_AS(mle_weighted(same, std::vector<double>{1, 1, 1}), ConvergenceError);
}

TEST_CASE("simplex validation") {
  CHECK_NOTHROW(validate_simplex_point(std::vector<double>{0.25, 0.75}));
  CHECK_THROWS_AS(validate_simplex_point(std::vector<double>{0.25, 0.7}), ValidationError);
  CHECK_THROWS_AS(validate_simplex_point(std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(validate_simplex_point(std::vector<double>{NAN, 1.0}), ValidationError);
}
