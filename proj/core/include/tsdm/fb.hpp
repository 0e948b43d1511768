#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tsdm/inner_em.hpp"
#include "tsdm/tsdm_model.hpp"

namespace tsdm {

/// Fixed-background model: a frozen background density plus a new-class
/// Dirichlet mixture, mixed with weights lambda = (lambda_0, lambda_1..J)
/// where lambda_0 belongs to the background.
class FbModel {
 public:
  FbModel(TsdmModel background, std::vector<double> lambda,
          std::vector<DirichletParams> new_components);

  /// The background alone: lambda = (1), no new-class components.
  static FbModel background_only(TsdmModel background);

  const TsdmModel& background() const noexcept { return background_; }
  std::span<const double> lambda() const noexcept { return lambda_; }
  double lambda0() const noexcept { return lambda_.front(); }
  const std::vector<DirichletParams>& new_components() const noexcept { return new_components_; }
  std::size_t new_class_size() const noexcept { return new_components_.size(); }
  std::size_t dim() const noexcept { return background_.dim(); }

  /// New-class mixture with kappa_j = lambda_j / (1 - lambda_0); empty when
  /// there are no new-class components or lambda_0 == 1.
  std::optional<InnerMixture> new_class_mixture() const;

  /// out[0] = log lambda_0 + log f_B(y); out[j] = log lambda_j + log f(y; beta_j).
  void log_terms(std::span<const double> log_y, std::span<double> out) const;
  /// Same, reusing a precomputed log f_B(y).
  void log_terms(std::span<const double> log_y, double log_background, std::span<double> out) const;

  double log_density_from_logs(std::span<const double> log_y) const;
  double log_density_fb(std::span<const double> y) const;

  bool operator==(const FbModel&) const = default;

 private:
  TsdmModel background_;
  std::vector<double> lambda_;
  std::vector<DirichletParams> new_components_;
};

struct FbConfig {
  EmConfig em;
  std::vector<std::size_t> j_range{1, 2, 3, 4, 5};
  /// New-class starts are built from this lowest-background-density share
  /// of the data.
  double init_quantile = 0.1;
  double init_lambda0 = 0.9;
  double lambda_floor = 1e-10;
};

struct FbReport {
  /// Chosen run; candidates list every J tried.
  FitReport fit;
  /// True when the pure background beat every candidate on BIC or every
  /// candidate was discarded.
  bool no_novelty = false;
  double background_log_likelihood = 0.0;
  /// BIC of lambda_0 = 1 (no free parameters).
  double background_bic = 0.0;

  bool operator==(const FbReport&) const = default;
};

/// BIC = -2 loglik + (J*D + J) log n.
double fb_bic(double log_likelihood, std::size_t components, std::size_t dim, std::size_t n);

double fb_log_likelihood(const FbModel& m, const Matrix& data);

/// Responsibilities n x (J+1); column 0 is the background.
Matrix e_step_fb(const FbModel& m, const Matrix& data);

/// lambda_j = mean of column j. Entries below `floor` are raised to it and
/// the vector renormalized.
std::vector<double> lambda_update(const Matrix& resp, double floor = 0.0);

struct FbMStep {
  std::vector<double> lambda;
  std::vector<DirichletParams> components;
};

/// Closed-form lambda plus weighted MLE of every new-class component on
/// columns 1..J. Throws DegenerateDataError naming the first component
/// whose weighted sample is too small.
FbMStep m_step_fb(const Matrix& resp, const Matrix& data,
                  const std::vector<DirichletParams>* warm_start = nullptr,
                  const MleOptions& options = {}, double lambda_floor = 0.0);

/// Multi-start EM over the new-class parameters with the background held
/// fixed, BIC selection over j_range and against the pure background.
std::pair<FbModel, FbReport> fit_fb(const TsdmModel& background, const Matrix& data,
                                    const FbConfig& config);

}  // namespace tsdm
