#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "tsdm/classify.hpp"
#include "tsdm/errors.hpp"

using namespace tsdm;

namespace {

TsdmModel toy_background() {
  InnerMixture a({0.4, 0.6}, {DirichletParams({30, 5, 5}), DirichletParams({5, 30, 5})});
  InnerMixture b({1.0}, {DirichletParams({5, 5, 30})});
  return TsdmModel({"a", "b"}, {a, b}, {0.45, 0.55}, {0.5, 0.5});
}

}  // namespace

TEST_CASE("classify rules") {
  const Matrix pts = testing::random_simplex_points(300, 3, 3);
  SUBCASE("background only never flags") {
    const FbModel m = FbModel::background_only(toy_background());
    for (const auto& a : classify_batch(m, pts)) CHECK_FALSE(a.is_new_class);
  }
  SUBCASE("tied classes go to the first") {
    const InnerMixture same({1.0}, {DirichletParams({3, 3, 3})});
    const FbModel m = FbModel::background_only(TsdmModel({"p", "q"}, {same, same}, {0.5, 0.5}, {1, 1}));
    const auto a = classify(m, std::vector<double>{0.2, 0.3, 0.5});
    CHECK(*a.class_label == "p");
    CHECK(a.class_posteriors[0] == doctest::Approx(0.5));
    CHECK(a.class_posteriors[1] == doctest::Approx(0.5));
  }
  SUBCASE("posteriors are valid and decisions match the rule") {
    const FbModel m(toy_background(), {0.85, 0.15}, {DirichletParams({20, 20, 20})});
    for (const auto& a : classify_batch(m, pts, 3)) {
      const auto y = pts.row(a.point_index);
      double s = 0.0;
      for (double p : a.class_posteriors) s += p;
      CHECK(std::abs(s - 1.0) <= 1e-9);
      CHECK(a.posterior_background >= 0.0);
      CHECK(a.posterior_background <= 1.0);
      const double bg = m.lambda0() * std::exp(m.background().log_density_background(y));
      const double nc = m.lambda()[1] * std::exp(log_density(m.new_components()[0], y));
      CHECK(a.is_new_class == (nc > bg));
      CHECK(a.posterior_background == doctest::Approx(bg / (bg + nc)).epsilon(1e-10));
      CHECK(a.class_label.has_value() == !a.is_new_class);
    }
  }
  SUBCASE("parallel equals serial") {
    const FbModel m(toy_background(), {0.85, 0.15}, {DirichletParams({20, 20, 20})});
    const auto a = classify_batch(m, pts, 1);
    const auto b = classify_batch(m, pts, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].is_new_class == b[i].is_new_class);
      CHECK(a[i].class_label == b[i].class_label);
      CHECK(a[i].posterior_background == b[i].posterior_background);
    }
  }
  SUBCASE("dimension mismatch") {
    const FbModel m = FbModel::background_only(toy_background());
    CHECK_THROWS_AS(classify(m, std::vector<double>{0.5, 0.5}), ValidationError);
  }
}

TEST_CASE("synthetic oracle: well separated classes and novel cluster") {
  SynthSpec s;
  s.seed = 4;
  s.n_total = 2000;
  s.classes.push_back({"a", 1, {{1.0}, {{40, 5, 5}}}});
  s.classes.push_back({"b", 1, {{1.0}, {{5, 40, 5}}}});
  s.classes.push_back({"c", 1, {{1.0}, {{5, 5, 40}}}});
  s.novelty = NoveltySpec{"new", 0.1, {{1.0}, {{20, 20, 20}}}};
  const SynthResult r = generate(s);
  std::vector<InnerMixture> inner;
  for (const auto& c : s.classes) inner.push_back(c.mixture.to_mixture());
  const TsdmModel bg({"a", "b", "c"}, inner, {0.3, 0.3, 0.4}, {1, 1, 1});
  const FbModel m(bg, {0.9, 0.1}, {DirichletParams({20, 20, 20})});
  std::size_t correct = 0;
  const auto as = classify_batch(m, r.data.points);
  for (std::size_t i = 0; i < as.size(); ++i) correct += predicted_label(as[i], "new") == r.data.labels[i];
  CHECK(static_cast<double>(correct) / as.size() >= 0.95);
}

TEST_CASE("evaluate") {
  const std::vector<std::string> known{"a", "b"};
  SUBCASE("perfect") {
    const std::vector<std::string> t{"a", "b", "NEW", "a"};
    const Evaluation e = evaluate(t, t, known, "NEW");
    CHECK(e.metrics.overall_accuracy == 1.0);
    CHECK(e.metrics.new_class_sensitivity == 1.0);
    CHECK(e.metrics.new_class_specificity == 1.0);
  }
  SUBCASE("sensitivity 0.9") {
    std::vector<std::string> t(10, "X"), p(10, "NEW");
    p[0] = "a";
    const Evaluation e = evaluate(p, t, known, "NEW", {"X"});
    CHECK(e.metrics.new_class_sensitivity == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(std::isnan(e.metrics.new_class_specificity));
  }
  SUBCASE("specificity 0.99") {
    std::vector<std::string> t(100, "a"), p(100, "a");
    p[7] = "NEW";
    const Evaluation e = evaluate(p, t, known, "NEW");
    CHECK(e.metrics.new_class_specificity == doctest::Approx(0.99).epsilon(1e-15));
    CHECK(std::isnan(e.metrics.new_class_sensitivity));
  }
  SUBCASE("metrics recomputed from the confusion matrix agree exactly") {
    const std::vector<std::string> t{"a", "a", "b", "b", "X", "X", "b", "a"};
    const std::vector<std::string> p{"a", "b", "b", "NEW", "NEW", "a", "b", "a"};
    const Evaluation e = evaluate(p, t, known, "NEW", {"X"});
    const Metrics again = metrics_from_confusion(e.confusion, "NEW");
    CHECK(again.overall_accuracy == e.metrics.overall_accuracy);
    CHECK(again.per_class_accuracy == e.metrics.per_class_accuracy);
    CHECK(again.new_class_sensitivity == e.metrics.new_class_sensitivity);
    CHECK(again.new_class_specificity == e.metrics.new_class_specificity);
    CHECK(e.confusion.total() == 8);
    CHECK(e.metrics.overall_accuracy == doctest::Approx(5.0 / 8.0));
    CHECK(e.metrics.new_class_sensitivity == 0.5);
    CHECK(e.metrics.new_class_specificity == 5.0 / 6.0);
  }
  SUBCASE("unknown truth label") {
    const std::vector<std::string> t{"zzz"}, p{"a"};
    CHECK_THROWS_AS(evaluate(p, t, known, "NEW"), ValidationError);
  }
  SUBCASE("length mismatch") {
    const std::vector<std::string> t{"a", "b"}, p{"a"};
    CHECK_THROWS_AS(evaluate(p, t, known, "NEW"), ValidationError);
  }
}

TEST_CASE("signatures") {
  const auto s = signatures(InnerMixture({1.0}, {DirichletParams({2, 2, 4})}));
  CHECK(s[0] == std::vector<double>{0.25, 0.25, 0.5});
  const auto u = signatures(InnerMixture({1.0}, {DirichletParams(std::vector<double>(6, 1.0))}));
  for (double v : u[0]) CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  const InnerMixture three({0.2, 0.3, 0.5}, {DirichletParams({1.3, 7, 2}), DirichletParams({0.2, 0.9, 5}),
                                             DirichletParams({3, 3, 0.01})});
  const auto t = signatures(three);
  CHECK(t.size() == 3);
  for (const auto& v : t) {
    double sum = 0.0;
    for (double x : v) sum += x;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}
