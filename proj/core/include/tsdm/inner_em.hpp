#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsdm/dirichlet.hpp"
#include "tsdm/matrix.hpp"

namespace tsdm {

/// Finite mixture of Dirichlet densities with weights summing to one. Used
/// for each class distribution of the background model and for the
/// new-class model.
class InnerMixture {
 public:
  InnerMixture(std::vector<double> weights, std::vector<DirichletParams> components);

  std::size_t size() const noexcept { return components_.size(); }
  std::size_t dim() const noexcept { return components_.front().dim(); }
  std::span<const double> weights() const noexcept { return weights_; }
  const std::vector<DirichletParams>& components() const noexcept { return components_; }

  double log_density(std::span<const double> y) const;
  double log_density_from_logs(std::span<const double> log_y) const;

  /// out[j] = log(pi_j) + log f(y; alpha_j).
  void log_weighted_terms(std::span<const double> log_y, std::span<double> out) const;

  /// Component j of the result is component perm[j] of this mixture.
  InnerMixture permuted(std::span<const std::size_t> perm) const;

  bool operator==(const InnerMixture&) const = default;

 private:
  std::vector<double> weights_;
  std::vector<DirichletParams> components_;
};

/// One row of a model-selection table.
struct CandidateFit {
  std::size_t components = 0;
  /// False when the candidate was infeasible or every start was discarded.
  bool accepted = false;
  double log_likelihood = 0.0;
  double bic = 0.0;
  std::string note;

  bool operator==(const CandidateFit&) const = default;
};

struct FitReport {
  double final_log_likelihood = 0.0;
  double bic = 0.0;
  int iterations = 0;
  int n_starts_tried = 0;
  int n_starts_kept = 0;
  /// Smallest hard-assignment count over components of the chosen run.
  double min_occupancy = 0.0;
  bool converged = false;
  std::size_t n_points = 0;
  std::vector<CandidateFit> candidates;
  /// Observed-data log-likelihood after every E-step of the chosen run.
  std::vector<double> log_likelihood_trace;

  bool operator==(const FitReport&) const = default;
};

/// Called after every E-step with (start index, iteration, log-likelihood).
/// Must be thread-safe when workers > 1.
using IterationObserver = std::function<void(int, int, double)>;

struct EmConfig {
  std::size_t n_min = 3;
  /// Absolute log-likelihood gain at or below which a run stops.
  double epsilon = 1e-6;
  int max_iter = 500;
  int n_starts = 10;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  /// Standard deviation of the log-scale perturbation applied to the
  /// starting alphas of every start after the first.
  double perturbation_sd = 0.5;
  MleOptions mle;
  IterationObserver observer;
};

/// BIC = -2 loglik + (J*D + J - 1) log n.
double inner_bic(double log_likelihood, std::size_t components, std::size_t dim, std::size_t n);

double log_likelihood(const InnerMixture& m, const Matrix& data);

/// Responsibilities, n x J; rows sum to one. Computed in log space.
Matrix e_step(const InnerMixture& m, const Matrix& data);

/// pi_j = mean of column j; alpha_j = weighted MLE on column j, started
/// from `warm_start` when given and from moments otherwise.
InnerMixture m_step(const Matrix& resp, const Matrix& data,
                    const InnerMixture* warm_start = nullptr, const MleOptions& options = {});

/// Argmax of every row, ties to the lower index.
std::vector<std::size_t> hard_assignments(const Matrix& resp);

/// Number of rows assigned to each column by hard_assignments.
std::vector<std::size_t> occupancy(const Matrix& resp);

/// Multi-start EM for a fixed number of components. Runs whose smallest
/// hard-assignment occupancy is below n_min are discarded; the surviving
/// run with the highest log-likelihood wins. Throws ConvergenceError when
/// no run survives.
std::pair<InnerMixture, FitReport> fit_fixed_j(const Matrix& data, std::size_t components,
                                               const EmConfig& config);

/// Fits every feasible J in `candidates` and keeps the BIC minimizer (ties
/// to the smaller J). The report lists every candidate.
std::pair<InnerMixture, FitReport> select_j(const Matrix& data,
                                            std::span<const std::size_t> candidates,
                                            const EmConfig& config);

namespace detail {

/// Seed for one (stream, start) pair derived from a user seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t start);

/// E-step on precomputed log coordinates; fills resp and returns the
/// observed-data log-likelihood.
double e_step_logs(const InnerMixture& m, const Matrix& log_data, Matrix& resp);

}  // namespace detail

}  // namespace tsdm
