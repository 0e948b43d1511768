#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsdm/fb.hpp"
#include "tsdm/inner_em.hpp"

namespace tsdm {

/// MAP decision for one point.
struct Assignment {
  std::size_t point_index = 0;
  bool is_new_class = false;
  /// Set iff !is_new_class.
  std::optional<std::string> class_label;
  /// Index into the background labels of the best known class, always set
  /// (it is the fallback class even when the point is flagged new).
  std::size_t best_class = 0;
  /// Pr(point comes from the background | y).
  double posterior_background = 1.0;
  /// rho_k f_k(y) / f_B(y); sums to one.
  std::vector<double> class_posteriors;
};

/// Background wins when lambda_0 f_B >= sum_j lambda_j f_j (ties go to the
/// background); the class is then the argmax of rho_k f_k, ties to the
/// lower index.
Assignment classify(const FbModel& model, std::span<const double> y, std::size_t point_index = 0);

std::vector<Assignment> classify_batch(const FbModel& model, const Matrix& data,
                                       std::size_t workers = 1);

/// Label emitted for an assignment: the class label or `new_label`.
std::string predicted_label(const Assignment& a, const std::string& new_label);

/// Rows are truth, columns prediction, both indexed by `labels`.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t total() const;
  std::size_t index_of(const std::string& label) const;
  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  double overall_accuracy = 0.0;
  /// Diagonal over row sum, for every label with at least one truth row.
  std::map<std::string, double> per_class_accuracy;
  /// NaN when there are no truly novel points.
  double new_class_sensitivity = 0.0;
  /// NaN when there are no truly known points.
  double new_class_specificity = 0.0;
};

struct Evaluation {
  ConfusionMatrix confusion;
  Metrics metrics;
};

/// Metrics derived from a confusion matrix whose labels include new_label.
Metrics metrics_from_confusion(const ConfusionMatrix& cm, const std::string& new_label);

/// Builds the confusion matrix over known_labels + new_label. Truth labels
/// listed in novel_truth_labels count as new_label; any other truth label
/// outside known_labels is an error.
Evaluation evaluate(std::span<const std::string> predicted, std::span<const std::string> truth,
                    const std::vector<std::string>& known_labels, const std::string& new_label,
                    const std::vector<std::string>& novel_truth_labels = {});

/// Normalized Dirichlet means, one per component.
std::vector<std::vector<double>> signatures(const InnerMixture& m);

}  // namespace tsdm
