#pragma once

namespace tsdm::special {

double log_gamma(double x);
double digamma(double x);
double trigamma(double x);

/// Solves digamma(x) = y for x > 0 by Newton iteration from Minka's
/// starting point. Accurate to a few ulps for y in the range produced by
/// Dirichlet fixed-point updates.
double inverse_digamma(double y);

}  // namespace tsdm::special
