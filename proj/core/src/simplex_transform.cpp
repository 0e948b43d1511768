#include "tsdm/simplex_transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsdm/errors.hpp"

namespace tsdm {

namespace {

double logit(double p) { return std::log(p) - std::log1p(-p); }

}  // namespace

AttributeMap::AttributeMap(std::string name, CubicSpline logit_spline, double clamp)
    : name_(std::move(name)), spline_(std::move(logit_spline)), clamp_(clamp) {
  if (!(clamp_ > 0.0 && clamp_ < 0.5))
    throw ValidationError("probability clamp must lie in (0, 0.5)");
  const std::size_t n = spline_.x.size();
  if (n < 2 || spline_.y.size() != n || spline_.slope.size() != n)
    throw ValidationError("attribute map '" + name_ + "' has malformed knots");
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (!(spline_.x[i + 1] > spline_.x[i]) || !(spline_.y[i + 1] > spline_.y[i]))
      throw ValidationError("attribute map '" + name_ + "' is not strictly increasing");
}

double AttributeMap::probability(double raw) const {
  if (!std::isfinite(raw))
    throw ValidationError("attribute '" + name_ + "' has a non-finite value");
  const double p = 1.0 / (1.0 + std::exp(-logit(raw)));
  return std::clamp(p, clamp_, 1.0 - clamp_);
}

std::vector<double> plotting_positions(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> out(n);
  const double denom = static_cast<double>(n) + 1.0;
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // Ranks start+1..end, averaged.
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t k = start; k < end; ++k) out[order[k]] = rank / denom;
    start = end;
  }
  return out;
}

AttributeMap fit_attribute_map(std::string name, std::span<const double> values,
                               const TransformOptions& options) {
  for (double v : values)
    if (!std::isfinite(v))
      throw ValidationError("attribute '" + name + "' has a non-finite value");
  const std::vector<double> probs = plotting_positions(values);

  // Distinct values with their (shared) plotting position and multiplicity.
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> xs, ys, ws;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double v = values[order[k]];
    if (!xs.empty() && xs.back() == v) {
      ws.back() += 1.0;
      continue;
    }
    xs.push_back(v);
    ys.push_back(logit(probs[order[k]]));
    ws.push_back(1.0);
  }
  if (xs.size() < 2)
    throw ValidationError("attribute '" + name + "' is constant; cannot build a probability map");

  if (options.smoothing > 0.0 && options.max_knots >= 2 && xs.size() > options.max_knots) {
    std::vector<double> kx, ky, kw;
    const std::size_t m = options.max_knots;
    for (std::size_t q = 0; q < m; ++q) {
      const std::size_t idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(q) * static_cast<double>(xs.size() - 1) /
                       static_cast<double>(m - 1)));
      if (!kx.empty() && kx.back() == xs[idx]) continue;
      kx.push_back(xs[idx]);
      ky.push_back(ys[idx]);
      kw.push_back(1.0);
    }
    xs.swap(kx);
    ys.swap(ky);
    ws.swap(kw);
  }

  CubicSpline spline = fit_natural_spline(xs, ys, ws, options.smoothing);
  limit_to_monotone(spline);
  return AttributeMap(std::move(name), std::move(spline), options.clamp);
}

SimplexTransform::SimplexTransform(std::vector<AttributeMap> maps) : maps_(std::move(maps)) {
  if (maps_.empty()) throw ValidationError("simplex transform needs at least one attribute");
}

SimplexTransform SimplexTransform::fit(const Matrix& raw, const std::vector<std::string>& names,
                                       const TransformOptions& options) {
  if (names.size() != raw.cols())
    throw ValidationError("attribute name count does not match column count");
  std::vector<AttributeMap> maps;
  maps.reserve(raw.cols());
  for (std::size_t j = 0; j < raw.cols(); ++j) {
    const std::vector<double> col = raw.column(j);
    maps.push_back(fit_attribute_map(names[j], col, options));
  }
  return SimplexTransform(std::move(maps));
}

std::vector<std::string> SimplexTransform::attribute_names() const {
  std::vector<std::string> out;
  for (const auto& m : maps_) out.push_back(m.name());
  return out;
}

std::vector<double> SimplexTransform::probabilities(std::span<const double> raw_row) const {
  if (raw_row.size() != maps_.size())
    throw ValidationError("raw row has " + std::to_string(raw_row.size()) +
                          " attributes, transform expects " + std::to_string(maps_.size()));
  std::vector<double> p(maps_.size());
  for (std::size_t j = 0; j < maps_.size(); ++j) p[j] = maps_[j].probability(raw_row[j]);
  return p;
}

std::vector<double> probabilities_to_simplex(std::span<const double> probabilities) {
  const double dm1 = static_cast<double>(probabilities.size());
  std::vector<double> out(probabilities.size() + 1);
  double total = 0.0;
  for (std::size_t j = 0; j < probabilities.size(); ++j) {
    out[j] = probabilities[j] / dm1;
    total += probabilities[j];
  }
  out.back() = (dm1 - total) / dm1;
  return out;
}

std::vector<double> SimplexTransform::apply(std::span<const double> raw_row) const {
  return probabilities_to_simplex(probabilities(raw_row));
}

Matrix SimplexTransform::apply_batch(const Matrix& raw) const {
  Matrix out(raw.rows(), simplex_dim());
  for (std::size_t i = 0; i < raw.rows(); ++i) {
    const std::vector<double> y = apply(raw.row(i));
    std::copy(y.begin(), y.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace tsdm
