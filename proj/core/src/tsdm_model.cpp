#include "tsdm/tsdm_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

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

}  // namespace

void LabeledDataset::validate() const {
  if (labels.size() != points.rows())
    throw ValidationError("dataset has " + std::to_string(points.rows()) + " points but " +
                          std::to_string(labels.size()) + " labels");
  validate_simplex_data(points);
}

std::vector<std::string> LabeledDataset::classes() const {
  const std::set<std::string> unique(labels.begin(), labels.end());
  return {unique.begin(), unique.end()};
}

Matrix LabeledDataset::points_of(const std::string& label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) idx.push_back(i);
  return points.select_rows(idx);
}

TsdmModel::TsdmModel(std::vector<std::string> labels, std::vector<InnerMixture> inner,
                     std::vector<double> rho, std::vector<double> prior_e,
                     std::vector<std::size_t> class_counts, std::vector<FitReport> reports,
                     bool rho_mode_fallback)
    : labels_(std::move(labels)),
      inner_(std::move(inner)),
      rho_(std::move(rho)),
      prior_e_(std::move(prior_e)),
      class_counts_(std::move(class_counts)),
      reports_(std::move(reports)),
      rho_mode_fallback_(rho_mode_fallback) {
  const std::size_t k = labels_.size();
  if (k == 0) throw ValidationError("background model needs at least one class");
  if (inner_.size() != k || rho_.size() != k || prior_e_.size() != k)
    throw ValidationError("background model arrays must all have one entry per class");
  if (!class_counts_.empty() && class_counts_.size() != k)
    throw ValidationError("class count array has the wrong length");
  if (!reports_.empty() && reports_.size() != k)
    throw ValidationError("fit report array has the wrong length");
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != k)
    throw ValidationError("class labels must be unique");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(rho_[i] > 0.0 && rho_[i] < 1.0) && k > 1)
      throw ValidationError("outer weight rho must lie in (0,1)");
    if (!(prior_e_[i] > 0.0)) throw ValidationError("prior parameters must be positive");
    if (inner_[i].dim() != inner_.front().dim())
      throw ValidationError("class mixtures have different dimensions");
    total += rho_[i];
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("outer weights do not sum to 1");
}

std::size_t TsdmModel::class_index(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown class label '" + label + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

void TsdmModel::log_class_terms(std::span<const double> log_y, std::span<double> out) const {
  for (std::size_t k = 0; k < inner_.size(); ++k)
    out[k] = std::log(rho_[k]) + inner_[k].log_density_from_logs(log_y);
}

double TsdmModel::log_density_from_logs(std::span<const double> log_y) const {
  std::vector<double> terms(inner_.size());
  log_class_terms(log_y, terms);
  return log_sum_exp(terms);
}

double TsdmModel::log_density_background(std::span<const double> y) const {
  if (y.size() != dim()) throw ValidationError("point dimension does not match model");
  std::vector<double> logs(y.size());
  validate_simplex_point(y);
  log_coordinates(y, logs);
  return log_density_from_logs(logs);
}

RhoEstimate posterior_rho(std::span<const std::size_t> counts, std::span<const double> prior_e) {
  const std::size_t k = counts.size();
  if (k == 0 || prior_e.size() != k)
    throw ValidationError("class counts and prior must be non-empty and of equal length");
  double n = 0.0;
  double e_total = 0.0;
  bool mode_exists = true;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(prior_e[i] > 0.0) || !std::isfinite(prior_e[i]))
      throw ValidationError("prior parameters must be positive and finite");
    n += static_cast<double>(counts[i]);
    e_total += prior_e[i];
    if (static_cast<double>(counts[i]) + prior_e[i] <= 1.0) mode_exists = false;
  }
  if (n < 1.0) throw ValidationError("posterior_rho needs at least one observation");
  RhoEstimate est;
  est.rho.resize(k);
  if (mode_exists) {
    const double denom = n + e_total - static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i)
      est.rho[i] = (static_cast<double>(counts[i]) + prior_e[i] - 1.0) / denom;
  } else {
    est.used_mean_fallback = true;
    const double denom = n + e_total;
    for (std::size_t i = 0; i < k; ++i)
      est.rho[i] = (static_cast<double>(counts[i]) + prior_e[i]) / denom;
  }
  return est;
}

std::vector<ClassFit> fit_stage1(const LabeledDataset& data, const TsdmConfig& config) {
  data.validate();
  const std::vector<std::string> classes = data.classes();
  if (classes.empty()) throw ValidationError("training data has no labelled points");
  std::vector<Matrix> per_class;
  for (const auto& label : classes) {
    per_class.push_back(data.points_of(label));
    if (per_class.back().rows() < std::max<std::size_t>(config.em.n_min, 1))
      throw ValidationError("class '" + label + "' has " +
                            std::to_string(per_class.back().rows()) +
                            " points, fewer than n_min = " + std::to_string(config.em.n_min));
  }
  for (const auto& [label, range] : config.class_j_ranges) {
    if (std::find(classes.begin(), classes.end(), label) == classes.end())
      throw ValidationError("J range given for unknown class '" + label + "'");
    if (range.empty()) throw ValidationError("J range for class '" + label + "' is empty");
  }

  // Classes in parallel, EM starts serial inside; seeds do not depend on
  // the class so each fit only sees its own data.
  EmConfig inner = config.em;
  const std::size_t workers = config.em.workers;
  if (classes.size() > 1) inner.workers = 1;
  std::vector<std::optional<ClassFit>> fits(classes.size());
  detail::parallel_for(classes.size(), classes.size() > 1 ? workers : 1, [&](std::size_t k) {
    const auto it = config.class_j_ranges.find(classes[k]);
    const std::vector<std::size_t>& range =
        it != config.class_j_ranges.end() ? it->second : config.j_range;
    try {
      auto [mixture, report] = select_j(per_class[k], range, inner);
      fits[k] = ClassFit{classes[k], std::move(mixture), std::move(report)};
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("class '" + classes[k] + "': " + e.what());
    }
  });
  std::vector<ClassFit> out;
  for (auto& f : fits) out.push_back(std::move(*f));
  return out;
}

TsdmModel fit_tsdm(const LabeledDataset& data, const TsdmConfig& config) {
  std::vector<ClassFit> fits = fit_stage1(data, config);
  const std::size_t k = fits.size();
  std::vector<double> prior = config.prior_e;
  if (prior.empty()) prior.assign(k, 1.0 / static_cast<double>(k));
  if (prior.size() != k)
    throw ValidationError("prior has " + std::to_string(prior.size()) + " entries for " +
                          std::to_string(k) + " classes");
  std::vector<std::size_t> counts;
  for (const auto& f : fits) counts.push_back(f.report.n_points);
  RhoEstimate rho = posterior_rho(counts, prior);

  std::vector<std::string> labels;
  std::vector<InnerMixture> inner;
  std::vector<FitReport> reports;
  for (auto& f : fits) {
    labels.push_back(std::move(f.label));
    inner.push_back(std::move(f.mixture));
    reports.push_back(std::move(f.report));
  }
  return TsdmModel(std::move(labels), std::move(inner), std::move(rho.rho), std::move(prior),
                   std::move(counts), std::move(reports), rho.used_mean_fallback);
}

}  // namespace tsdm
