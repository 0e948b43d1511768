#include "tsdm/fb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
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

// Offsets keep FB start seeds disjoint from the inner-EM streams.
constexpr std::uint64_t kFbSeedStream = 1u << 20;

// log lambda_0 + log f_B, then log lambda_j + log f(y; beta_j).
void fb_terms(std::span<const double> lambda, const std::vector<DirichletParams>& components,
              std::span<const double> log_y, double log_background, std::span<double> out) {
  out[0] = std::log(lambda[0]) + log_background;
  for (std::size_t j = 0; j < components.size(); ++j)
    out[j + 1] = std::log(lambda[j + 1]) + log_density_from_logs(components[j], log_y);
}

struct FbState {
  std::vector<double> lambda;
  std::vector<DirichletParams> components;
};

struct FbRun {
  std::optional<FbState> state;
  double log_likelihood = -std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  double min_occupancy = 0.0;
  std::vector<double> trace;
  std::string discard_reason;
};

double e_step_cached(std::span<const double> lambda,
                     const std::vector<DirichletParams>& components, const Matrix& log_data,
                     std::span<const double> log_background, Matrix& resp) {
  const std::size_t cols = components.size() + 1;
  if (resp.rows() != log_data.rows() || resp.cols() != cols) resp = Matrix(log_data.rows(), cols);
  std::vector<double> terms(cols);
  double total = 0.0;
  for (std::size_t i = 0; i < log_data.rows(); ++i) {
    fb_terms(lambda, components, log_data.row(i), log_background[i], terms);
    const double lse = log_sum_exp(terms);
    total += lse;
    auto r = resp.row(i);
    for (std::size_t j = 0; j < cols; ++j) r[j] = std::exp(terms[j] - lse);
  }
  return total;
}

FbMStep m_step_logs(const Matrix& resp, const Matrix& log_data,
                    const std::vector<DirichletParams>& warm, const MleOptions& options,
                    double lambda_floor) {
  FbMStep out;
  out.lambda = lambda_update(resp, lambda_floor);
  for (std::size_t j = 1; j < resp.cols(); ++j) {
    const WeightedLogStats stats = weighted_log_stats(log_data, resp.column(j));
    try {
      out.components.push_back(mle_from_stats(stats, warm[j - 1], options));
    } catch (const DegenerateDataError& e) {
      throw DegenerateDataError("new-class component " + std::to_string(j) + ": " + e.what());
    }
  }
  return out;
}

FbState initial_state(const Matrix& data,
                      std::span<const double> log_background, std::size_t components,
                      const FbConfig& config, int start, std::mt19937_64& rng) {
  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return log_background[a] < log_background[b];
  });
  const std::size_t minimum = components * std::max<std::size_t>(config.em.n_min, 2);
  std::size_t take = static_cast<std::size_t>(std::ceil(config.init_quantile * static_cast<double>(n)));
  take = std::min(n, std::max(take, minimum));
  order.resize(take);
  const Matrix subset = data.select_rows(order);

  const std::vector<std::size_t> labels = detail::kmeans(subset, components, rng);
  detail::ClusterStart init = detail::cluster_moment_start(subset, labels, components);
  if (start > 0) {
    for (auto& c : init.components) c = detail::perturb(c, config.em.perturbation_sd, rng);
  }
  std::vector<double> lambda{config.init_lambda0};
  for (double p : init.proportions) lambda.push_back((1.0 - config.init_lambda0) * p);
  return FbState{std::move(lambda), std::move(init.components)};
}

FbRun run_fb(const Matrix& data, const Matrix& log_data,
             std::span<const double> log_background, std::size_t components,
             const FbConfig& config, int start) {
  FbRun result;
  std::mt19937_64 rng(detail::derive_seed(config.em.seed, kFbSeedStream + components,
                                          static_cast<std::uint64_t>(start)));
  try {
    FbState current = initial_state(data, log_background, components, config, start, rng);
    Matrix resp;
    double ll = e_step_cached(current.lambda, current.components, log_data, log_background, resp);
    result.trace.push_back(ll);
    if (config.em.observer) config.em.observer(start, 0, ll);
    for (int it = 1; it <= config.em.max_iter; ++it) {
      FbMStep step =
          m_step_logs(resp, log_data, current.components, config.em.mle, config.lambda_floor);
      current = FbState{std::move(step.lambda), std::move(step.components)};
      const double next_ll =
          e_step_cached(current.lambda, current.components, log_data, log_background, resp);
      result.trace.push_back(next_ll);
      if (config.em.observer) config.em.observer(start, it, next_ll);
      result.iterations = it;
      const double gain = next_ll - ll;
      ll = next_ll;
      if (gain <= config.em.epsilon) {
        result.converged = true;
        break;
      }
    }
    const std::vector<std::size_t> occ = occupancy(resp);
    result.min_occupancy = static_cast<double>(*std::min_element(occ.begin() + 1, occ.end()));
    if (result.min_occupancy < static_cast<double>(config.em.n_min)) {
      result.discard_reason = "new-class occupancy " + std::to_string(result.min_occupancy) +
                              " below n_min";
      return result;
    }
    result.log_likelihood = ll;
    result.state = std::move(current);
  } catch (const ConvergenceError& e) {
    result.discard_reason = e.what();
  }
  return result;
}

}  // namespace

FbModel::FbModel(TsdmModel background, std::vector<double> lambda,
                 std::vector<DirichletParams> new_components)
    : background_(std::move(background)),
      lambda_(std::move(lambda)),
      new_components_(std::move(new_components)) {
  if (lambda_.size() != new_components_.size() + 1)
    throw ValidationError("lambda must have one entry per new-class component plus one");
  double total = 0.0;
  for (double l : lambda_) {
    if (!(l >= 0.0 && l <= 1.0)) throw ValidationError("lambda entries must lie in [0,1]");
    total += l;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("lambda does not sum to 1");
  for (const auto& c : new_components_)
    if (c.dim() != background_.dim())
      throw ValidationError("new-class component dimension does not match background");
}

FbModel FbModel::background_only(TsdmModel background) {
  return FbModel(std::move(background), {1.0}, {});
}

std::optional<InnerMixture> FbModel::new_class_mixture() const {
  if (new_components_.empty() || lambda0() >= 1.0) return std::nullopt;
  const double mass = 1.0 - lambda0();
  std::vector<double> kappa;
  for (std::size_t j = 1; j < lambda_.size(); ++j) kappa.push_back(lambda_[j] / mass);
  const double total = std::accumulate(kappa.begin(), kappa.end(), 0.0);
  for (double& k : kappa) k /= total;
  return InnerMixture(std::move(kappa), new_components_);
}

void FbModel::log_terms(std::span<const double> log_y, double log_background,
                        std::span<double> out) const {
  fb_terms(lambda_, new_components_, log_y, log_background, out);
}

void FbModel::log_terms(std::span<const double> log_y, std::span<double> out) const {
  log_terms(log_y, background_.log_density_from_logs(log_y), out);
}

double FbModel::log_density_from_logs(std::span<const double> log_y) const {
  std::vector<double> terms(lambda_.size());
  log_terms(log_y, terms);
  return log_sum_exp(terms);
}

double FbModel::log_density_fb(std::span<const double> y) const {
  if (y.size() != dim()) throw ValidationError("point dimension does not match model");
  std::vector<double> logs(y.size());
  validate_simplex_point(y);
  log_coordinates(y, logs);
  return log_density_from_logs(logs);
}

double fb_bic(double log_likelihood, std::size_t components, std::size_t dim, std::size_t n) {
  const double params = static_cast<double>(components * dim + components);
  return -2.0 * log_likelihood + params * std::log(static_cast<double>(n));
}

double fb_log_likelihood(const FbModel& m, const Matrix& data) {
  const Matrix logs = log_coordinates(data);
  double total = 0.0;
  for (std::size_t i = 0; i < logs.rows(); ++i) total += m.log_density_from_logs(logs.row(i));
  return total;
}

Matrix e_step_fb(const FbModel& m, const Matrix& data) {
  if (data.cols() != m.dim()) throw ValidationError("data dimension does not match model");
  const Matrix logs = log_coordinates(data);
  std::vector<double> log_bg(logs.rows());
  for (std::size_t i = 0; i < logs.rows(); ++i)
    log_bg[i] = m.background().log_density_from_logs(logs.row(i));
  Matrix resp;
  e_step_cached(m.lambda(), m.new_components(), logs, log_bg, resp);
  return resp;
}

std::vector<double> lambda_update(const Matrix& resp, double floor) {
  if (resp.rows() == 0) throw ValidationError("responsibility matrix is empty");
  std::vector<double> lambda = resp.column_sums();
  for (double& l : lambda) l /= static_cast<double>(resp.rows());
  if (floor > 0.0 && std::any_of(lambda.begin(), lambda.end(), [&](double l) { return l < floor; })) {
    double total = 0.0;
    for (double& l : lambda) {
      l = std::max(l, floor);
      total += l;
    }
    for (double& l : lambda) l /= total;
  }
  return lambda;
}

FbMStep m_step_fb(const Matrix& resp, const Matrix& data,
                  const std::vector<DirichletParams>* warm_start, const MleOptions& options,
                  double lambda_floor) {
  if (resp.rows() != data.rows()) throw ValidationError("responsibilities and data differ in length");
  if (resp.cols() < 1) throw ValidationError("responsibility matrix needs a background column");
  const Matrix logs = log_coordinates(data);
  if (warm_start) {
    if (warm_start->size() + 1 != resp.cols())
      throw ValidationError("warm start has the wrong number of components");
    return m_step_logs(resp, logs, *warm_start, options, lambda_floor);
  }
  std::vector<DirichletParams> starts;
  for (std::size_t j = 1; j < resp.cols(); ++j) {
    const std::vector<double> w = resp.column(j);
    const WeightedLogStats stats = weighted_log_stats(logs, w);
    if (!(stats.total_weight > 0.0) || stats.effective_points < options.min_effective_points - 1e-9)
      throw DegenerateDataError("new-class component " + std::to_string(j) +
                                " has effective size " + std::to_string(stats.effective_points));
    starts.push_back(method_of_moments(data, w));
  }
  return m_step_logs(resp, logs, starts, options, lambda_floor);
}

std::pair<FbModel, FbReport> fit_fb(const TsdmModel& background, const Matrix& data,
                                    const FbConfig& config) {
  if (data.cols() != background.dim())
    throw ValidationError("data dimension " + std::to_string(data.cols()) +
                          " does not match background dimension " +
                          std::to_string(background.dim()));
  if (data.rows() < std::max<std::size_t>(config.em.n_min, 1))
    throw ValidationError("need at least n_min unlabelled points");
  if (config.j_range.empty()) throw ValidationError("new-class J range is empty");
  if (!(config.init_lambda0 > 0.0 && config.init_lambda0 < 1.0))
    throw ValidationError("initial lambda_0 must lie in (0,1)");
  validate_simplex_data(data);

  const Matrix log_data = log_coordinates(data);
  std::vector<double> log_bg(data.rows());
  double bg_ll = 0.0;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    log_bg[i] = background.log_density_from_logs(log_data.row(i));
    bg_ll += log_bg[i];
  }

  FbReport report;
  report.background_log_likelihood = bg_ll;
  report.background_bic = -2.0 * bg_ll;

  std::optional<FbModel> best_model;
  FitReport best_fit;
  std::vector<CandidateFit> table;
  const int starts = std::max(config.em.n_starts, 1);
  for (std::size_t j : config.j_range) {
    CandidateFit row;
    row.components = j;
    if (j == 0 || data.rows() < j * std::max<std::size_t>(config.em.n_min, 1)) {
      row.note = "infeasible: fewer than J * n_min points";
      table.push_back(row);
      continue;
    }
    std::vector<FbRun> runs(static_cast<std::size_t>(starts));
    detail::parallel_for(runs.size(), config.em.workers, [&](std::size_t s) {
      runs[s] = run_fb(data, log_data, log_bg, j, config, static_cast<int>(s));
    });
    std::optional<std::size_t> win;
    int kept = 0;
    for (std::size_t s = 0; s < runs.size(); ++s) {
      if (!runs[s].state) continue;
      ++kept;
      if (!win || runs[s].log_likelihood > runs[*win].log_likelihood) win = s;
    }
    if (!win) {
      row.note = "all starts discarded (" + runs.back().discard_reason + ")";
      table.push_back(row);
      continue;
    }
    FbRun& r = runs[*win];
    row.accepted = true;
    row.log_likelihood = r.log_likelihood;
    row.bic = fb_bic(r.log_likelihood, j, data.cols(), data.rows());
    table.push_back(row);
    const bool better = !best_model || row.bic < best_fit.bic;
    if (better) {
      best_fit = FitReport{};
      best_fit.final_log_likelihood = r.log_likelihood;
      best_fit.bic = row.bic;
      best_fit.iterations = r.iterations;
      best_fit.n_starts_tried = starts;
      best_fit.n_starts_kept = kept;
      best_fit.min_occupancy = r.min_occupancy;
      best_fit.converged = r.converged;
      best_fit.n_points = data.rows();
      best_fit.log_likelihood_trace = std::move(r.trace);
      best_model = FbModel(background, std::move(r.state->lambda), std::move(r.state->components));
    }
  }

  if (!best_model || !(best_fit.bic < report.background_bic)) {
    report.no_novelty = true;
    report.fit = FitReport{};
    report.fit.final_log_likelihood = bg_ll;
    report.fit.bic = report.background_bic;
    report.fit.converged = true;
    report.fit.n_points = data.rows();
    report.fit.candidates = std::move(table);
    return {FbModel::background_only(background), std::move(report)};
  }
  report.fit = std::move(best_fit);
  report.fit.candidates = std::move(table);
  return {std::move(*best_model), std::move(report)};
}

}  // namespace tsdm
