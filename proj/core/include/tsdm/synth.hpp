#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsdm/inner_em.hpp"
#include "tsdm/tsdm_model.hpp"

namespace tsdm {

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<std::vector<double>> alphas;

  InnerMixture to_mixture() const;
};

struct ClassSpec {
  std::string label;
  /// Exact count, or relative frequency when SynthSpec::n_total is set.
  std::size_t size = 0;
  MixtureSpec mixture;
};

struct NoveltySpec {
  std::string label = "NEW";
  /// Probability that a point comes from the novelty mixture.
  double rate = 0.0;
  MixtureSpec mixture;
};

/// Generating model for a labelled synthetic dataset. Without n_total the
/// classes get exactly `size` points each, in order. With n_total every
/// point is novel with probability novelty->rate and otherwise belongs to
/// class k with probability size_k / sum(size). A novelty component
/// requires n_total.
struct SynthSpec {
  std::vector<ClassSpec> classes;
  std::optional<NoveltySpec> novelty;
  std::optional<std::size_t> n_total;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t dim() const;
};

/// Where a generated point came from; kept apart from the public dataset.
struct HiddenAssignment {
  std::string source;
  bool novel = false;
  std::size_t component = 0;

  bool operator==(const HiddenAssignment&) const = default;
};

struct SynthResult {
  /// Labels are the true source labels (novel points carry novelty->label).
  LabeledDataset data;
  std::vector<HiddenAssignment> hidden;
};

/// Class, then component, then Dirichlet draw. Deterministic in spec.seed.
SynthResult generate(const SynthSpec& spec);

/// Log-likelihood of data under the generating density
///   (1 - rate) sum_k rho_k f_k(y) + rate f_new(y),  rho_k = size_k / sum(size).
/// Zero for empty data.
double true_log_likelihood(const SynthSpec& spec, const Matrix& data);

}  // namespace tsdm
