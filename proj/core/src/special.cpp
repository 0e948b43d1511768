#include "tsdm/special.hpp"

#include <cmath>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace tsdm::special {

// boost::math::lgamma is reentrant; std::lgamma writes the global signgam.
double log_gamma(double x) { return boost::math::lgamma(x); }

double digamma(double x) { return boost::math::digamma(x); }

double trigamma(double x) { return boost::math::trigamma(x); }

double inverse_digamma(double y) {
  constexpr double kEulerGamma = 0.57721566490153286061;
  double x = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y + kEulerGamma);
  for (int it = 0; it < 50; ++it) {
    const double step = (digamma(x) - y) / trigamma(x);
    double next = x - step;
    if (next <= 0.0) next = 0.5 * x;
    const bool done = std::abs(next - x) <= 1e-15 * next;
    x = next;
    if (done) break;
  }
  return x;
}

}  // namespace tsdm::special
