#include "tsdm/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "tsdm/errors.hpp"

namespace tsdm {

namespace {

// Symmetric positive-definite matrix with two sub-diagonals; band[i][o]
// holds A(i, i - o).
using Band = std::vector<std::array<double, 3>>;

std::vector<double> solve_banded_spd(Band a, std::vector<double> rhs) {
  const std::size_t m = a.size();
  // In-place Cholesky: a becomes L with the same band layout.
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t o = std::min<std::size_t>(i, 2) + 1; o-- > 0;) {
      const std::size_t j = i - o;
      double s = a[i][o];
      for (std::size_t k = (i >= 2 ? i - 2 : 0); k < j; ++k) s -= a[i][i - k] * a[j][j - k];
      if (o == 0) {
        if (!(s > 0.0)) throw ValidationError("spline system is not positive definite");
        a[i][0] = std::sqrt(s);
      } else {
        a[i][o] = s / a[j][0];
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    double s = rhs[i];
    for (std::size_t o = 1; o <= std::min<std::size_t>(i, 2); ++o) s -= a[i][o] * rhs[i - o];
    rhs[i] = s / a[i][0];
  }
  for (std::size_t i = m; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t o = 1; o <= 2 && i + o < m; ++o) s -= a[i + o][o] * rhs[i + o];
    rhs[i] = s / a[i][0];
  }
  return rhs;
}

}  // namespace

double CubicSpline::evaluate(double t) const {
  const std::size_t n = x.size();
  if (n == 1) return y[0];
  if (t <= x.front()) return y.front() + slope.front() * (t - x.front());
  if (t >= x.back()) return y.back() + slope.back() * (t - x.back());
  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin()) - 1;
  const double h = x[i + 1] - x[i];
  const double u = (t - x[i]) / h;
  const double u2 = u * u;
  const double u3 = u2 * u;
  const double h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
  const double h10 = u3 - 2.0 * u2 + u;
  const double h01 = -2.0 * u3 + 3.0 * u2;
  const double h11 = u3 - u2;
  return h00 * y[i] + h10 * h * slope[i] + h01 * y[i + 1] + h11 * h * slope[i + 1];
}

CubicSpline fit_natural_spline(std::span<const double> x, std::span<const double> y,
                               std::span<const double> weights, double smoothing) {
  const std::size_t n = x.size();
  if (n < 2) throw ValidationError("spline needs at least two knots");
  if (y.size() != n || weights.size() != n)
    throw ValidationError("spline inputs have mismatched lengths");
  if (!(smoothing >= 0.0)) throw ValidationError("spline smoothing must be non-negative");
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x[i + 1] - x[i];
    if (!(h[i] > 0.0)) throw ValidationError("spline knots must be strictly increasing");
  }
  for (double w : weights)
    if (!(w > 0.0)) throw ValidationError("spline weights must be positive");

  CubicSpline s;
  s.x.assign(x.begin(), x.end());
  s.y.assign(y.begin(), y.end());
  std::vector<double> curvature(n, 0.0);

  if (n > 2) {
    const std::size_t m = n - 2;
    // Q has columns for interior knots 1..n-2 and nonzeros in rows j-1..j+1.
    auto q = [&](std::size_t row, std::size_t col) -> double {
      const std::size_t j = col + 1;
      if (row + 1 == j) return 1.0 / h[j - 1];
      if (row == j) return -1.0 / h[j - 1] - 1.0 / h[j];
      if (row == j + 1) return 1.0 / h[j];
      return 0.0;
    };
    Band band(m, {0.0, 0.0, 0.0});
    std::vector<double> rhs(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t j = c + 1;
      band[c][0] = (h[j - 1] + h[j]) / 3.0;
      if (c >= 1) band[c][1] = h[j - 1] / 6.0;
      for (std::size_t r = j - 1; r <= j + 1; ++r) rhs[c] += q(r, c) * y[r];
    }
    if (smoothing > 0.0) {
      for (std::size_t r = 0; r < n; ++r) {
        const std::size_t lo = r >= 2 ? r - 2 : 0;
        const std::size_t hi = std::min(r, m - 1);
        for (std::size_t c = lo; c <= hi; ++c)
          for (std::size_t c2 = (c >= 2 ? c - 2 : 0); c2 <= c; ++c2)
            band[c][c - c2] += smoothing * q(r, c) * q(r, c2) / weights[r];
      }
    }
    const std::vector<double> gamma = solve_banded_spd(std::move(band), std::move(rhs));
    for (std::size_t c = 0; c < m; ++c) curvature[c + 1] = gamma[c];
    if (smoothing > 0.0) {
      for (std::size_t r = 0; r < n; ++r) {
        double qg = 0.0;
        const std::size_t lo = r >= 2 ? r - 2 : 0;
        const std::size_t hi = std::min(r, m - 1);
        for (std::size_t c = lo; c <= hi; ++c) qg += q(r, c) * gamma[c];
        s.y[r] = y[r] - smoothing * qg / weights[r];
      }
    }
  }

  s.slope.resize(n);
  for (std::size_t i = 0; i + 1 < n; ++i)
    s.slope[i] = (s.y[i + 1] - s.y[i]) / h[i] - h[i] * (2.0 * curvature[i] + curvature[i + 1]) / 6.0;
  s.slope[n - 1] = (s.y[n - 1] - s.y[n - 2]) / h[n - 2] +
                   h[n - 2] * (curvature[n - 2] + 2.0 * curvature[n - 1]) / 6.0;
  return s;
}

bool limit_to_monotone(CubicSpline& s) {
  bool changed = false;
  const std::size_t n = s.x.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double delta = (s.y[i + 1] - s.y[i]) / (s.x[i + 1] - s.x[i]);
    if (!(delta > 0.0))
      throw ValidationError("spline values are not strictly increasing at knot " +
                            std::to_string(i + 1));
    for (std::size_t k : {i, i + 1}) {
      if (s.slope[k] < 0.0) {
        s.slope[k] = 0.0;
        changed = true;
      }
    }
    const double a = s.slope[i] / delta;
    const double b = s.slope[i + 1] / delta;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      s.slope[i] = tau * a * delta;
      s.slope[i + 1] = tau * b * delta;
      changed = true;
    }
  }
  return changed;
}

}  // namespace tsdm
