#include <cmath>
#include <mutex>

#include "doctest.h"
#include "helpers.hpp"
#include "tsdm/errors.hpp"
#include "tsdm/inner_em.hpp"

using namespace tsdm;

namespace {

MixtureSpec bimodal() { return {{0.4, 0.6}, {{12, 3, 3}, {3, 3, 12}}}; }

void check_stochastic(const Matrix& resp) {
  for (std::size_t i = 0; i < resp.rows(); ++i) {
    double s = 0.0;
    for (double v : resp.row(i)) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-12);
  }
}

}  // namespace

TEST_CASE("e_step examples") {
  const Matrix data = testing::random_simplex_points(50, 3, 1);
  SUBCASE("identical components, equal weights") {
    const InnerMixture m({0.5, 0.5}, {DirichletParams({2, 3, 4}), DirichletParams({2, 3, 4})});
    const Matrix r = e_step(m, data);
    for (std::size_t i = 0; i < r.rows(); ++i) {
      CHECK(r(i, 0) == doctest::Approx(0.5).epsilon(1e-14));
      CHECK(r(i, 1) == doctest::Approx(0.5).epsilon(1e-14));
    }
  }
  SUBCASE("identical components, unequal weights") {
    const double eps = 1e-3;
    const InnerMixture m({1 - eps, eps}, {DirichletParams({2, 3, 4}), DirichletParams({2, 3, 4})});
    const Matrix r = e_step(m, data);
    for (std::size_t i = 0; i < r.rows(); ++i) CHECK(r(i, 1) == doctest::Approx(eps).epsilon(1e-12));
  }
  SUBCASE("point at a component mean") {
    const InnerMixture m({0.5, 0.5}, {DirichletParams({40, 5, 5}), DirichletParams({5, 5, 40})});
    const std::vector<double> y{0.8, 0.1, 0.1};
    const Matrix r = e_step(m, Matrix::from_rows({y}));
    const double l0 = log_density(m.components()[0], y), l1 = log_density(m.components()[1], y);
    CHECK(r(0, 0) > 0.99);
    CHECK(r(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(l1 - l0))).epsilon(1e-12));
  }
  SUBCASE("extreme densities stay finite") {
    const InnerMixture m({0.5, 0.5}, {DirichletParams({900, 1, 1}), DirichletParams({1, 1, 900})});
    check_stochastic(e_step(m, data));
  }
}

TEST_CASE("m_step examples") {
  const Matrix data = Matrix::from_rows({{0.2, 0.3, 0.5}, {0.6, 0.2, 0.2}, {0.25, 0.35, 0.4},
                                         {0.3, 0.3, 0.4}, {0.5, 0.25, 0.25}, {0.1, 0.6, 0.3}});
  SUBCASE("hard responsibilities give counts") {
    const Matrix resp = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}, {1, 0}, {0, 1}, {0, 1}});
    const Matrix resp3 = Matrix::from_rows({{1, 0}, {0, 1}, {1, 0}});
    const Matrix data3 = data.select_rows(std::vector<std::size_t>{0, 1, 2});
    // One point cannot support a Dirichlet fit.
    CHECK_THROWS_AS(m_step(resp3, data3), DegenerateDataError);
    const InnerMixture m = m_step(resp, data);
    CHECK(m.weights()[0] == doctest::Approx(0.5));
  }
  SUBCASE("pi closed form") {
    Matrix resp(6, 2);
    for (std::size_t i = 0; i < 6; ++i) {
      resp(i, 0) = i % 3 == 1 ? 0.0 : 1.0;
      resp(i, 1) = 1.0 - resp(i, 0);
    }
    // Columns hold 4 and 2 points: pi = (2/3, 1/3).
    const InnerMixture m = m_step(resp, data);
    CHECK(m.weights()[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("uniform responsibilities") {
    const Matrix resp(6, 3, 1.0 / 3.0);
    const InnerMixture m = m_step(resp, data);
    for (double w : m.weights()) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("J=1 equals the unweighted MLE") {
    const Matrix resp(6, 1, 1.0);
    const InnerMixture m = m_step(resp, data);
    CHECK(m.weights()[0] == 1.0);
    const DirichletParams direct = mle_weighted(data, std::vector<double>(6, 1.0));
    for (std::size_t d = 0; d < 3; ++d)
      CHECK(m.components()[0][d] == doctest::Approx(direct[d]).epsilon(1e-10));
  }
}

TEST_CASE("BIC formula") {
  CHECK(inner_bic(-10.0, 2, 3, 100) == doctest::Approx(20.0 + 7.0 * std::log(100.0)));
  CHECK(inner_bic(5.0, 1, 4, 50) == doctest::Approx(-10.0 + 4.0 * std::log(50.0)));
}

TEST_CASE("fit_fixed_j") {
  const Matrix data = testing::sample_mixture(bimodal(), 600, 5);
  EmConfig cfg;
  cfg.seed = 9;

  SUBCASE("J=1 is a single weighted MLE") {
    const auto [m, rep] = fit_fixed_j(data, 1, cfg);
    const DirichletParams direct = mle_weighted(data, std::vector<double>(data.rows(), 1.0));
    double ll = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) ll += log_density(direct, data.row(i));
    CHECK(rep.final_log_likelihood == doctest::Approx(ll).epsilon(1e-10));
    CHECK(std::abs(rep.final_log_likelihood - ll) <= 1e-8 * std::max(1.0, std::abs(ll)));
  }

  SUBCASE("bimodal recovery up to permutation") {
    const auto [m, rep] = fit_fixed_j(data, 2, cfg);
    std::vector<std::vector<double>> fitted;
    for (const auto& c : m.components()) fitted.push_back(c.mean());
    const auto truth = testing::means(bimodal().alphas);
    const auto perm = testing::match_components(fitted, truth);
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(std::abs(m.weights()[perm[j]] - bimodal().weights[j]) < 0.05);
      for (std::size_t d = 0; d < 3; ++d) CHECK(std::abs(fitted[perm[j]][d] - truth[j][d]) < 0.05);
    }
  }

  SUBCASE("monotone trace and valid responsibilities") {
    std::mutex mu;
    std::vector<std::vector<double>> traces(cfg.n_starts);
    cfg.observer = [&](int start, int, double ll) {
      std::lock_guard lock(mu);
      traces[start].push_back(ll);
    };
    const auto [m, rep] = fit_fixed_j(data, 3, cfg);
    for (const auto& t : traces)
      for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] >= t[i - 1] - 1e-8);
    check_stochastic(e_step(m, data));
  }

  SUBCASE("deterministic, and independent of worker count") {
    const auto a = fit_fixed_j(data, 2, cfg);
    cfg.workers = 4;
    const auto b = fit_fixed_j(data, 2, cfg);
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
  }

  SUBCASE("permuting components leaves likelihood unchanged") {
    const auto [m, rep] = fit_fixed_j(data, 2, cfg);
    const std::vector<std::size_t> perm{1, 0};
    const InnerMixture p = m.permuted(perm);
    CHECK(log_likelihood(p, data) == doctest::Approx(log_likelihood(m, data)).epsilon(1e-12));
    CHECK(log_likelihood(m, data) == doctest::Approx(rep.final_log_likelihood).epsilon(1e-12));
  }

  SUBCASE("too few points") {
    CHECK_THROWS_AS(fit_fixed_j(data.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4}), 2, cfg),
                    ValidationError);
  }
}

TEST_CASE("mixture density integrates to one") {
  const InnerMixture m({0.3, 0.7}, {DirichletParams({4, 2, 2}), DirichletParams({1.5, 1.5, 6})});
  const Matrix u = testing::random_simplex_points(200000, 3, 2);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.rows(); ++i) acc += std::exp(m.log_density(u.row(i)) - std::log(2.0));
  CHECK(acc / u.rows() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("select_j") {
  EmConfig cfg;
  cfg.seed = 3;
  const Matrix data = testing::sample_mixture(bimodal(), 400, 6);

  SUBCASE("singleton range equals fit_fixed_j") {
    const std::vector<std::size_t> r{2};
    const auto a = select_j(data, r, cfg);
    const auto b = fit_fixed_j(data, 2, cfg);
    CHECK(a.first == b.first);
    CHECK(a.second.final_log_likelihood == b.second.final_log_likelihood);
    CHECK(a.second.candidates.size() == 1);
  }

  SUBCASE("table lists every candidate and picks the BIC minimum") {
    const std::vector<std::size_t> r{1, 2, 3, 4};
    const auto [m, rep] = select_j(data, r, cfg);
    CHECK(rep.candidates.size() == 4);
    double best = INFINITY;
    std::size_t best_j = 0;
    for (const auto& c : rep.candidates)
      if (c.accepted && c.bic < best) {
        best = c.bic;
        best_j = c.components;
      }
    CHECK(m.size() == best_j);
    CHECK(m.size() == 2);
  }

  SUBCASE("unimodal data prefers J=1") {
    int ones = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Matrix uni = testing::sample_mixture({{1.0}, {{6, 3, 4}}}, 300, 40 + s);
      const std::vector<std::size_t> r{1, 2, 3};
      cfg.seed = s;
      ones += select_j(uni, r, cfg).first.size() == 1;
    }
    CHECK(ones >= 4);
  }

  SUBCASE("infeasible candidates are reported, not fatal") {
    const Matrix few = data.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    const std::vector<std::size_t> r{1, 5};
    const auto [m, rep] = select_j(few, r, cfg);
    CHECK(m.size() == 1);
    CHECK_FALSE(rep.candidates[1].accepted);
  }
}

TEST_CASE("mixture validation") {
  CHECK_THROWS_AS(InnerMixture({0.5, 0.4}, {DirichletParams({1, 1}), DirichletParams({2, 2})}),
                  ValidationError);
  CHECK_THROWS_AS(InnerMixture({1.0, 0.0}, {DirichletParams({1, 1}), DirichletParams({2, 2})}),
                  ValidationError);
  CHECK_THROWS_AS(InnerMixture({0.5, 0.5}, {DirichletParams({1, 1}), DirichletParams({2, 2, 2})}),
                  ValidationError);
}
