#include "tsdm/inner_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "kmeans.hpp"
#include "parallel.hpp"
#include "tsdm/errors.hpp"

namespace tsdm {

namespace {

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct RunResult {
  std::optional<InnerMixture> mixture;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double min_occupancy = 0.0;
  std::vector<double> trace;
  std::string discard_reason;
};

InnerMixture initial_mixture(const Matrix& data, std::size_t components, const EmConfig& config,
                             int start, std::mt19937_64& rng) {
  const std::vector<std::size_t> labels = detail::kmeans(data, components, rng);
  detail::ClusterStart init = detail::cluster_moment_start(data, labels, components);
  if (start > 0) {
    for (auto& c : init.components) c = detail::perturb(c, config.perturbation_sd, rng);
  }
  return InnerMixture(std::move(init.proportions), std::move(init.components));
}

InnerMixture m_step_logs(const Matrix& resp, const Matrix& log_data, const InnerMixture& warm,
                         const MleOptions& options) {
  const std::size_t n = resp.rows();
  const std::size_t components = resp.cols();
  std::vector<double> weights(components);
  std::vector<DirichletParams> params;
  params.reserve(components);
  for (std::size_t j = 0; j < components; ++j) {
    const std::vector<double> w = resp.column(j);
    const WeightedLogStats stats = weighted_log_stats(log_data, w);
    weights[j] = stats.total_weight / static_cast<double>(n);
    params.push_back(mle_from_stats(stats, warm.components()[j], options));
  }
  return InnerMixture(std::move(weights), std::move(params));
}

RunResult run_em(const Matrix& data, const Matrix& log_data, std::size_t components,
                 const EmConfig& config, int start) {
  RunResult result;
  std::mt19937_64 rng(detail::derive_seed(config.seed, components, static_cast<std::uint64_t>(start)));
  try {
    InnerMixture current = initial_mixture(data, components, config, start, rng);
    Matrix resp(data.rows(), components);
    double ll = detail::e_step_logs(current, log_data, resp);
    result.trace.push_back(ll);
    if (config.observer) config.observer(start, 0, ll);
    for (int it = 1; it <= config.max_iter; ++it) {
      current = m_step_logs(resp, log_data, current, config.mle);
      const double next_ll = detail::e_step_logs(current, log_data, resp);
      result.trace.push_back(next_ll);
      if (config.observer) config.observer(start, it, next_ll);
      result.iterations = it;
      const double gain = next_ll - ll;
      ll = next_ll;
      if (gain <= config.epsilon) {
        result.converged = true;
        break;
      }
    }
    const std::vector<std::size_t> occ = occupancy(resp);
    result.min_occupancy = static_cast<double>(*std::min_element(occ.begin(), occ.end()));
    if (result.min_occupancy < static_cast<double>(config.n_min)) {
      result.discard_reason = "component occupancy " + std::to_string(result.min_occupancy) +
                              " below n_min";
      return result;
    }
    result.log_likelihood = ll;
    result.mixture = std::move(current);
  } catch (const ConvergenceError& e) {
    result.discard_reason = e.what();
  }
  return result;
}

}  // namespace

InnerMixture::InnerMixture(std::vector<double> weights, std::vector<DirichletParams> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("mixture needs at least one component");
  if (weights_.size() != components_.size())
    throw ValidationError("mixture weight count does not match component count");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0)) throw ValidationError("mixture weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw ValidationError("mixture weights sum to " + std::to_string(total));
  for (const auto& c : components_)
    if (c.dim() != components_.front().dim())
      throw ValidationError("mixture components have different dimensions");
}

void InnerMixture::log_weighted_terms(std::span<const double> log_y, std::span<double> out) const {
  for (std::size_t j = 0; j < components_.size(); ++j)
    out[j] = std::log(weights_[j]) + tsdm::log_density_from_logs(components_[j], log_y);
}

double InnerMixture::log_density_from_logs(std::span<const double> log_y) const {
  std::vector<double> terms(components_.size());
  log_weighted_terms(log_y, terms);
  return log_sum_exp(terms);
}

double InnerMixture::log_density(std::span<const double> y) const {
  if (y.size() != dim())
    throw ValidationError("point dimension does not match mixture dimension");
  std::vector<double> logs(y.size());
  validate_simplex_point(y);
  log_coordinates(y, logs);
  return log_density_from_logs(logs);
}

InnerMixture InnerMixture::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != size()) throw ValidationError("permutation has wrong length");
  std::vector<double> w;
  std::vector<DirichletParams> c;
  for (std::size_t j : perm) {
    w.push_back(weights_.at(j));
    c.push_back(components_.at(j));
  }
  return InnerMixture(std::move(w), std::move(c));
}

double inner_bic(double log_likelihood, std::size_t components, std::size_t dim, std::size_t n) {
  const double params = static_cast<double>(components * dim + components - 1);
  return -2.0 * log_likelihood + params * std::log(static_cast<double>(n));
}

namespace detail {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t start) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(start)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

double e_step_logs(const InnerMixture& m, const Matrix& log_data, Matrix& resp) {
  const std::size_t components = m.size();
  if (resp.rows() != log_data.rows() || resp.cols() != components)
    resp = Matrix(log_data.rows(), components);
  std::vector<double> terms(components);
  double total = 0.0;
  for (std::size_t i = 0; i < log_data.rows(); ++i) {
    m.log_weighted_terms(log_data.row(i), terms);
    const double lse = log_sum_exp(terms);
    total += lse;
    auto r = resp.row(i);
    for (std::size_t j = 0; j < components; ++j) r[j] = std::exp(terms[j] - lse);
  }
  return total;
}

}  // namespace detail

double log_likelihood(const InnerMixture& m, const Matrix& data) {
  const Matrix logs = log_coordinates(data);
  double total = 0.0;
  for (std::size_t i = 0; i < logs.rows(); ++i) total += m.log_density_from_logs(logs.row(i));
  return total;
}

Matrix e_step(const InnerMixture& m, const Matrix& data) {
  if (data.cols() != m.dim()) throw ValidationError("data dimension does not match mixture");
  Matrix resp;
  detail::e_step_logs(m, log_coordinates(data), resp);
  return resp;
}

InnerMixture m_step(const Matrix& resp, const Matrix& data, const InnerMixture* warm_start,
                    const MleOptions& options) {
  if (resp.rows() != data.rows() || resp.rows() == 0)
    throw ValidationError("responsibilities and data have different row counts");
  const Matrix logs = log_coordinates(data);
  if (warm_start) {
    if (warm_start->size() != resp.cols())
      throw ValidationError("warm start has the wrong number of components");
    return m_step_logs(resp, logs, *warm_start, options);
  }
  std::vector<double> weights(resp.cols());
  std::vector<DirichletParams> params;
  for (std::size_t j = 0; j < resp.cols(); ++j) {
    const std::vector<double> w = resp.column(j);
    const WeightedLogStats stats = weighted_log_stats(logs, w);
    weights[j] = stats.total_weight / static_cast<double>(resp.rows());
    if (!(stats.total_weight > 0.0) || stats.effective_points < options.min_effective_points - 1e-9)
      throw DegenerateDataError("component " + std::to_string(j) + " has effective size " +
                                std::to_string(stats.effective_points));
    params.push_back(mle_from_stats(stats, method_of_moments(data, w), options));
  }
  return InnerMixture(std::move(weights), std::move(params));
}

std::vector<std::size_t> hard_assignments(const Matrix& resp) {
  std::vector<std::size_t> out(resp.rows());
  for (std::size_t i = 0; i < resp.rows(); ++i) {
    auto r = resp.row(i);
    out[i] = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  }
  return out;
}

std::vector<std::size_t> occupancy(const Matrix& resp) {
  std::vector<std::size_t> counts(resp.cols(), 0);
  for (std::size_t j : hard_assignments(resp)) ++counts[j];
  return counts;
}

std::pair<InnerMixture, FitReport> fit_fixed_j(const Matrix& data, std::size_t components,
                                               const EmConfig& config) {
  if (components == 0) throw ValidationError("number of components must be at least 1");
  if (data.rows() < components * std::max<std::size_t>(config.n_min, 1))
    throw ValidationError("need at least J * n_min = " +
                          std::to_string(components * config.n_min) + " points, have " +
                          std::to_string(data.rows()));
  validate_simplex_data(data);
  const Matrix log_data = log_coordinates(data);

  // A single Dirichlet has a concave log-likelihood; extra starts are moot.
  const int starts = components == 1 ? 1 : std::max(config.n_starts, 1);
  std::vector<RunResult> runs(static_cast<std::size_t>(starts));
  detail::parallel_for(runs.size(), config.workers, [&](std::size_t s) {
    runs[s] = run_em(data, log_data, components, config, static_cast<int>(s));
  });

  std::optional<std::size_t> best;
  int kept = 0;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    if (!runs[s].mixture) continue;
    ++kept;
    if (!best || runs[s].log_likelihood > runs[*best].log_likelihood) best = s;
  }
  if (!best) {
    throw ConvergenceError("all " + std::to_string(starts) + " EM starts with J=" +
                           std::to_string(components) +
                           " were discarded (last reason: " + runs.back().discard_reason + ")");
  }
  RunResult& win = runs[*best];
  FitReport report;
  report.final_log_likelihood = win.log_likelihood;
  report.bic = inner_bic(win.log_likelihood, components, data.cols(), data.rows());
  report.iterations = win.iterations;
  report.n_starts_tried = starts;
  report.n_starts_kept = kept;
  report.min_occupancy = win.min_occupancy;
  report.converged = win.converged;
  report.n_points = data.rows();
  report.log_likelihood_trace = std::move(win.trace);
  report.candidates.push_back(
      {components, true, report.final_log_likelihood, report.bic, std::string{}});
  return {std::move(*win.mixture), std::move(report)};
}

std::pair<InnerMixture, FitReport> select_j(const Matrix& data,
                                            std::span<const std::size_t> candidates,
                                            const EmConfig& config) {
  if (candidates.empty()) throw ValidationError("candidate J range is empty");
  std::vector<CandidateFit> table;
  std::optional<std::pair<InnerMixture, FitReport>> best;
  for (std::size_t j : candidates) {
    CandidateFit row;
    row.components = j;
    if (j == 0 || data.rows() < j * std::max<std::size_t>(config.n_min, 1)) {
      row.note = "infeasible: fewer than J * n_min points";
      table.push_back(row);
      continue;
    }
    try {
      auto fit = fit_fixed_j(data, j, config);
      row.accepted = true;
      row.log_likelihood = fit.second.final_log_likelihood;
      row.bic = fit.second.bic;
      const bool better = !best || fit.second.bic < best->second.bic ||
                          (fit.second.bic == best->second.bic && j < best->first.size());
      if (better) best = std::move(fit);
    } catch (const ConvergenceError& e) {
      row.note = e.what();
    }
    table.push_back(row);
  }
  if (!best) throw ConvergenceError("no candidate number of components could be fitted");
  best->second.candidates = std::move(table);
  return std::move(*best);
}

}  // namespace tsdm
