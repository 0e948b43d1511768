#pragma once

#include <span>
#include <vector>

namespace tsdm {

/// Piecewise cubic in Hermite form: values and first derivatives at
/// strictly increasing knots. Linear beyond the end knots, continuing the
/// end slopes.
struct CubicSpline {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> slope;

  double evaluate(double t) const;
  bool operator==(const CubicSpline&) const = default;
};

/// Natural cubic smoothing spline (Reinsch). Minimizes
///   sum_i w_i (y_i - g(x_i))^2 + smoothing * integral g''(t)^2 dt.
/// smoothing == 0 gives the interpolating natural spline. x must be strictly
/// increasing, weights positive.
CubicSpline fit_natural_spline(std::span<const double> x, std::span<const double> y,
                               std::span<const double> weights, double smoothing);

/// Fritsch-Carlson slope limiter. Requires strictly increasing knot values;
/// afterwards the spline is monotone increasing on every segment. Returns
/// true when any slope was modified.
bool limit_to_monotone(CubicSpline& spline);

}  // namespace tsdm
