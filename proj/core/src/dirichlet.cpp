#include "tsdm/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tsdm/errors.hpp"
#include "tsdm/special.hpp"

namespace tsdm {

namespace {

// Past this the sample is effectively a point mass.
constexpr double kMaxAlpha = 1e8;
constexpr double kMinAlpha = 1e-6;

double clamp_unit(double v) { return std::clamp(v, kSimplexClamp, 1.0 - kSimplexClamp); }

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double objective(std::span<const double> alpha, std::span<const double> mean_log) {
  double sum = 0.0, v = 0.0;
  for (std::size_t d = 0; d < alpha.size(); ++d) {
    sum += alpha[d];
    v += (alpha[d] - 1.0) * mean_log[d] - special::log_gamma(alpha[d]);
  }
  return v + special::log_gamma(sum);
}

// Newton step with the diagonal plus rank-one Hessian, halved until it
// stays positive. Returns false when no positive step exists.
bool newton_step(std::span<const double> alpha, std::span<const double> mean_log,
                 std::vector<double>& out) {
  const std::size_t d_count = alpha.size();
  const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  const double psi_sum = special::digamma(sum);
  const double z = special::trigamma(sum);
  std::vector<double> g(d_count), q(d_count);
  double num = 0.0, den = 1.0 / z;
  for (std::size_t d = 0; d < d_count; ++d) {
    g[d] = psi_sum - special::digamma(alpha[d]) + mean_log[d];
    q[d] = -special::trigamma(alpha[d]);
    num += g[d] / q[d];
    den += 1.0 / q[d];
  }
  const double b = num / den;
  out.resize(d_count);
  for (double scale = 1.0; scale > 1e-6; scale *= 0.5) {
    bool ok = true;
    for (std::size_t d = 0; d < d_count && ok; ++d) {
      out[d] = alpha[d] - scale * (g[d] - b) / q[d];
      ok = out[d] > 0.0 && std::isfinite(out[d]);
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace

DirichletParams::DirichletParams(std::vector<double> alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() < 2)
    throw ValidationError("Dirichlet dimension must be at least 2, got " +
                          std::to_string(alpha_.size()));
  double log_gamma_sum = 0.0;
  for (std::size_t d = 0; d < alpha_.size(); ++d) {
    const double a = alpha_[d];
    if (!(a > 0.0) || !std::isfinite(a))
      throw ValidationError("Dirichlet parameter alpha[" + std::to_string(d) +
                            "] must be positive and finite, got " + std::to_string(a));
    sum_ += a;
    log_gamma_sum += special::log_gamma(a);
  }
  log_beta_ = log_gamma_sum - special::log_gamma(sum_);
}

std::vector<double> DirichletParams::mean() const {
  std::vector<double> m(alpha_.begin(), alpha_.end());
  for (double& v : m) v /= sum_;
  return m;
}

void validate_simplex_point(std::span<const double> y) {
  if (y.size() < 2) throw ValidationError("simplex point needs at least 2 coordinates");
  double s = 0.0;
  for (std::size_t d = 0; d < y.size(); ++d) {
    if (!(y[d] >= 0.0 && y[d] <= 1.0))
      throw ValidationError("simplex coordinate " + std::to_string(d) + " outside [0,1]: " +
                            std::to_string(y[d]));
    s += y[d];
  }
  if (std::abs(s - 1.0) > kSimplexSumTolerance)
    throw ValidationError("simplex coordinates sum to " + std::to_string(s) + ", not 1");
}

void validate_simplex_data(const Matrix& data) {
  for (std::size_t i = 0; i < data.rows(); ++i) {
    try {
      validate_simplex_point(data.row(i));
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(i) + ": " + e.what());
    }
  }
}

void log_coordinates(std::span<const double> y, std::span<double> out) {
  for (std::size_t d = 0; d < y.size(); ++d) {
    if (!(y[d] >= 0.0 && y[d] <= 1.0))
      throw ValidationError("simplex coordinate outside [0,1]: " + std::to_string(y[d]));
    out[d] = std::log(clamp_unit(y[d]));
  }
}

Matrix log_coordinates(const Matrix& data) {
  Matrix out(data.rows(), data.cols());
  for (std::size_t i = 0; i < data.rows(); ++i) log_coordinates(data.row(i), out.row(i));
  return out;
}

double log_density_from_logs(const DirichletParams& p, std::span<const double> log_y) {
  double acc = -p.log_beta();
  for (std::size_t d = 0; d < log_y.size(); ++d) acc += (p[d] - 1.0) * log_y[d];
  return acc;
}

double log_density(const DirichletParams& p, std::span<const double> y) {
  if (y.size() != p.dim())
    throw ValidationError("point dimension " + std::to_string(y.size()) +
                          " does not match Dirichlet dimension " + std::to_string(p.dim()));
  validate_simplex_point(y);
  std::vector<double> logs(y.size());
  log_coordinates(y, logs);
  return log_density_from_logs(p, logs);
}

void sample_one(const DirichletParams& p, std::mt19937_64& rng, std::span<double> out) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t dim = p.dim();
  std::vector<double> log_g(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double a = p[d];
    // Gamma(a) = Gamma(a + 1) * U^(1/a) keeps small shapes representable.
    std::gamma_distribution<double> gamma(a < 1.0 ? a + 1.0 : a, 1.0);
    double lg = std::log(gamma(rng));
    if (a < 1.0) {
      double u = unif(rng);
      while (u <= 0.0) u = unif(rng);
      lg += std::log(u) / a;
    }
    log_g[d] = lg;
  }
  const double norm = log_sum_exp(log_g);
  double total = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    out[d] = std::max(std::exp(log_g[d] - norm), std::numeric_limits<double>::min());
    total += out[d];
  }
  for (std::size_t d = 0; d < dim; ++d) out[d] /= total;
}

Matrix sample(const DirichletParams& p, std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  Matrix out(n, p.dim());
  for (std::size_t i = 0; i < n; ++i) sample_one(p, rng, out.row(i));
  return out;
}

WeightedLogStats weighted_log_stats(const Matrix& log_data, std::span<const double> weights) {
  if (weights.size() != log_data.rows())
    throw ValidationError("weights length " + std::to_string(weights.size()) +
                          " does not match number of points " + std::to_string(log_data.rows()));
  WeightedLogStats stats;
  stats.mean_log.assign(log_data.cols(), 0.0);
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < log_data.rows(); ++i) {
    const double w = weights[i];
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ValidationError("weights must be non-negative and finite");
    if (w == 0.0) continue;
    stats.total_weight += w;
    sum_sq += w * w;
    auto row = log_data.row(i);
    for (std::size_t d = 0; d < row.size(); ++d) stats.mean_log[d] += w * row[d];
  }
  if (stats.total_weight > 0.0) {
    for (double& v : stats.mean_log) v /= stats.total_weight;
    stats.effective_points = stats.total_weight * stats.total_weight / sum_sq;
  }
  return stats;
}

double mean_log_likelihood(const DirichletParams& p, const WeightedLogStats& stats) {
  double acc = -p.log_beta();
  for (std::size_t d = 0; d < p.dim(); ++d) acc += (p[d] - 1.0) * stats.mean_log[d];
  return acc;
}

std::vector<double> mean_log_likelihood_gradient(std::span<const double> alpha,
                                                 const WeightedLogStats& stats) {
  const double psi_sum = special::digamma(std::accumulate(alpha.begin(), alpha.end(), 0.0));
  std::vector<double> g(alpha.size());
  for (std::size_t d = 0; d < alpha.size(); ++d)
    g[d] = psi_sum - special::digamma(alpha[d]) + stats.mean_log[d];
  return g;
}

DirichletParams method_of_moments(const Matrix& data, std::span<const double> weights) {
  const std::size_t dim = data.cols();
  std::vector<double> m1(dim, 0.0), m2(dim, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const double w = weights[i];
    if (w <= 0.0) continue;
    total += w;
    auto row = data.row(i);
    for (std::size_t d = 0; d < dim; ++d) {
      m1[d] += w * row[d];
      m2[d] += w * row[d] * row[d];
    }
  }
  if (!(total > 0.0)) throw DegenerateDataError("method of moments: total weight is zero");
  double mass = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    m1[d] /= total;
    m2[d] /= total;
    mass += m1[d];
  }
  // Precision sum(alpha) from each coordinate's variance, averaged in logs.
  double log_precision = 0.0;
  int used = 0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double var = m2[d] - m1[d] * m1[d];
    if (var <= 0.0) continue;
    const double s = (m1[d] - m2[d]) / var;
    if (s > 0.0 && std::isfinite(s)) {
      log_precision += std::log(s);
      ++used;
    }
  }
  double precision = used > 0 ? std::exp(log_precision / used) : static_cast<double>(dim);
  precision = std::clamp(precision, 1e-2, 1e6);
  std::vector<double> alpha(dim);
  for (std::size_t d = 0; d < dim; ++d)
    alpha[d] = std::max(precision * m1[d] / mass, 1e-3);
  return DirichletParams(std::move(alpha));
}

DirichletParams mle_from_stats(const WeightedLogStats& stats, const DirichletParams& start,
                               const MleOptions& options, int* iterations) {
  if (!(stats.total_weight > 0.0) ||
      stats.effective_points < options.min_effective_points - 1e-9) {
    throw DegenerateDataError("weighted sample has effective size " +
                              std::to_string(stats.effective_points) + " (minimum " +
                              std::to_string(options.min_effective_points) + ")");
  }
  if (start.dim() != stats.mean_log.size())
    throw ValidationError("start dimension does not match data dimension");

  // Fixed-point ascent; a Newton step from the fixed-point iterate is kept
  // whenever it climbs higher.
  std::vector<double> alpha(start.alpha().begin(), start.alpha().end());
  std::vector<double> next(alpha.size());
  std::vector<double> newton;
  for (int it = 1; it <= options.max_iter; ++it) {
    const double psi_sum = special::digamma(std::accumulate(alpha.begin(), alpha.end(), 0.0));
    for (std::size_t d = 0; d < alpha.size(); ++d)
      next[d] = std::max(special::inverse_digamma(psi_sum + stats.mean_log[d]), kMinAlpha);
    if (newton_step(next, stats.mean_log, newton) &&
        objective(newton, stats.mean_log) > objective(next, stats.mean_log))
      next.swap(newton);
    double max_rel = 0.0;
    for (std::size_t d = 0; d < alpha.size(); ++d)
      max_rel = std::max(max_rel, std::abs(next[d] - alpha[d]) / alpha[d]);
    alpha.swap(next);
    if (*std::max_element(alpha.begin(), alpha.end()) > kMaxAlpha)
      throw DegenerateDataError("Dirichlet MLE diverging: weighted sample is nearly a point mass");
    if (max_rel < options.rel_tol) {
      if (iterations) *iterations = it;
      return DirichletParams(std::move(alpha));
    }
  }
  throw ConvergenceError("Dirichlet MLE did not converge in " +
                         std::to_string(options.max_iter) + " iterations");
}

DirichletParams mle_weighted(const Matrix& data, std::span<const double> weights,
                             const MleOptions& options) {
  const Matrix logs = log_coordinates(data);
  const WeightedLogStats stats = weighted_log_stats(logs, weights);
  if (!(stats.total_weight > 0.0) ||
      stats.effective_points < options.min_effective_points - 1e-9) {
    throw DegenerateDataError("weighted sample has effective size " +
                              std::to_string(stats.effective_points));
  }
  return mle_from_stats(stats, method_of_moments(data, weights), options);
}

}  // namespace tsdm
