#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tsdm/inner_em.hpp"
#include "tsdm/matrix.hpp"

namespace tsdm {

/// Simplex points with one class label each.
struct LabeledDataset {
  Matrix points;
  std::vector<std::string> labels;

  /// Equal lengths, valid simplex rows.
  void validate() const;
  /// Sorted unique labels.
  std::vector<std::string> classes() const;
  /// Rows carrying `label`, in input order.
  Matrix points_of(const std::string& label) const;
};

/// Background model: K class mixtures combined with outer weights rho.
class TsdmModel {
 public:
  TsdmModel(std::vector<std::string> labels, std::vector<InnerMixture> inner,
            std::vector<double> rho, std::vector<double> prior_e,
            std::vector<std::size_t> class_counts = {}, std::vector<FitReport> reports = {},
            bool rho_mode_fallback = false);

  std::size_t class_count() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return inner_.front().dim(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<InnerMixture>& inner() const noexcept { return inner_; }
  std::span<const double> rho() const noexcept { return rho_; }
  std::span<const double> prior_e() const noexcept { return prior_e_; }
  std::span<const std::size_t> class_counts() const noexcept { return class_counts_; }
  const std::vector<FitReport>& reports() const noexcept { return reports_; }
  bool rho_mode_fallback() const noexcept { return rho_mode_fallback_; }

  /// Index of `label`; throws ValidationError when absent.
  std::size_t class_index(const std::string& label) const;

  /// out[k] = log(rho_k) + log f_k(y).
  void log_class_terms(std::span<const double> log_y, std::span<double> out) const;
  double log_density_from_logs(std::span<const double> log_y) const;
  double log_density_background(std::span<const double> y) const;

  bool operator==(const TsdmModel&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<InnerMixture> inner_;
  std::vector<double> rho_;
  std::vector<double> prior_e_;
  std::vector<std::size_t> class_counts_;
  std::vector<FitReport> reports_;
  bool rho_mode_fallback_ = false;
};

struct RhoEstimate {
  std::vector<double> rho;
  /// True when some e_k + n_k <= 1 and the posterior mean was used.
  bool used_mean_fallback = false;
};

/// Mode of the Dirichlet posterior Dir(e + n):
///   rho_k = (n_k + e_k - 1) / (n + sum e - K),
/// or the posterior mean (n_k + e_k) / (n + sum e) when the mode does not
/// exist.
RhoEstimate posterior_rho(std::span<const std::size_t> counts, std::span<const double> prior_e);

struct TsdmConfig {
  EmConfig em;
  std::vector<std::size_t> j_range{1, 2, 3, 4, 5};
  /// Per-class overrides of j_range.
  std::map<std::string, std::vector<std::size_t>> class_j_ranges;
  /// Empty means Dir(1/K, ..., 1/K).
  std::vector<double> prior_e;
};

struct ClassFit {
  std::string label;
  InnerMixture mixture;
  FitReport report;
};

/// Stage 1: one BIC-selected mixture per class, fitted on that class only
/// and with the same seed for every class.
std::vector<ClassFit> fit_stage1(const LabeledDataset& data, const TsdmConfig& config);

/// Stage 1 followed by the posterior-mode outer weights.
TsdmModel fit_tsdm(const LabeledDataset& data, const TsdmConfig& config);

}  // namespace tsdm
