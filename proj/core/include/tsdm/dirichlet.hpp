#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tsdm/matrix.hpp"

namespace tsdm {

/// Coordinates are clamped to [kSimplexClamp, 1 - kSimplexClamp] before logs.
inline constexpr double kSimplexClamp = 1e-12;

/// Tolerance on |sum(y) - 1| for a valid simplex point.
inline constexpr double kSimplexSumTolerance = 1e-9;

/// Concentration parameters of a Dirichlet distribution on the
/// (D-1)-simplex. Always valid once constructed: D >= 2, every alpha > 0.
class DirichletParams {
 public:
  explicit DirichletParams(std::vector<double> alpha);

  std::size_t dim() const noexcept { return alpha_.size(); }
  std::span<const double> alpha() const noexcept { return alpha_; }
  double operator[](std::size_t d) const { return alpha_[d]; }
  double sum() const noexcept { return sum_; }

  /// log B(alpha) = sum_d lgamma(alpha_d) - lgamma(sum alpha).
  double log_beta() const noexcept { return log_beta_; }

  /// alpha / sum(alpha).
  std::vector<double> mean() const;

  bool operator==(const DirichletParams& other) const { return alpha_ == other.alpha_; }

 private:
  std::vector<double> alpha_;
  double sum_ = 0.0;
  double log_beta_ = 0.0;
};

/// Throws ValidationError unless every coordinate lies in [0, 1] and the
/// coordinates sum to one within kSimplexSumTolerance.
void validate_simplex_point(std::span<const double> y);

/// Applies validate_simplex_point to every row.
void validate_simplex_data(const Matrix& data);

/// Clamped elementwise log of a simplex point.
void log_coordinates(std::span<const double> y, std::span<double> out);

/// Elementwise clamped logs of every row; the EM code works on this
/// matrix so each log is taken once per fit.
Matrix log_coordinates(const Matrix& data);

/// Dirichlet log-density at y.
double log_density(const DirichletParams& p, std::span<const double> y);

/// Same as log_density, from precomputed log coordinates.
double log_density_from_logs(const DirichletParams& p, std::span<const double> log_y);

/// Draws one point via normalized Gamma variates, computed in log space so
/// small concentrations do not underflow to the simplex boundary.
void sample_one(const DirichletParams& p, std::mt19937_64& rng, std::span<double> out);

/// n i.i.d. draws, deterministic in seed.
Matrix sample(const DirichletParams& p, std::uint64_t seed, std::size_t n);

/// Sufficient statistics of a weighted sample for the Dirichlet likelihood.
struct WeightedLogStats {
  double total_weight = 0.0;
  /// Kish effective sample size (sum w)^2 / sum w^2.
  double effective_points = 0.0;
  /// sum_i w_i log y_id / sum_i w_i.
  std::vector<double> mean_log;
};

WeightedLogStats weighted_log_stats(const Matrix& log_data, std::span<const double> weights);

/// Weighted log-likelihood divided by the total weight.
double mean_log_likelihood(const DirichletParams& p, const WeightedLogStats& stats);

/// Gradient of the weighted log-likelihood divided by the total weight:
/// psi(sum alpha) - psi(alpha_d) + mean_log_d.
std::vector<double> mean_log_likelihood_gradient(std::span<const double> alpha,
                                                 const WeightedLogStats& stats);

struct MleOptions {
  int max_iter = 1000;
  /// Stop when max_d |alpha_new - alpha_old| / alpha_old falls below this.
  double rel_tol = 1e-8;
  /// Weighted samples with a smaller Kish effective size are degenerate.
  double min_effective_points = 2.0;
};

/// Method-of-moments estimate on a weighted sample (data on the simplex,
/// not logs). Used to seed the fixed-point iteration.
DirichletParams method_of_moments(const Matrix& data, std::span<const double> weights);

/// Weighted maximum likelihood via the digamma fixed point
///   psi(alpha_d) <- psi(sum alpha) + mean_log_d,
/// with a Newton step taken instead whenever it climbs higher.
/// Every iteration increases the likelihood, so starting from `start`
/// guarantees the result is no worse than `start`.
///
/// Throws DegenerateDataError when the effective sample is too small and
/// ConvergenceError when the iteration budget runs out.
DirichletParams mle_from_stats(const WeightedLogStats& stats, const DirichletParams& start,
                               const MleOptions& options = {}, int* iterations = nullptr);

/// Convenience form: moments start, data given on the simplex.
DirichletParams mle_weighted(const Matrix& data, std::span<const double> weights,
                             const MleOptions& options = {});

}  // namespace tsdm
