#include "tsdm/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

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

Assignment classify(const FbModel& model, std::span<const double> y, std::size_t point_index) {
  if (y.size() != model.dim()) throw ValidationError("point dimension does not match model");
  std::vector<double> log_y(y.size());
  validate_simplex_point(y);
  log_coordinates(y, log_y);

  const TsdmModel& bg = model.background();
  std::vector<double> class_terms(bg.class_count());
  bg.log_class_terms(log_y, class_terms);
  const double log_bg = log_sum_exp(class_terms);

  Assignment a;
  a.point_index = point_index;
  a.class_posteriors.resize(class_terms.size());
  for (std::size_t k = 0; k < class_terms.size(); ++k)
    a.class_posteriors[k] = std::exp(class_terms[k] - log_bg);
  // First maximum wins, so ties go to the lower class index.
  a.best_class = static_cast<std::size_t>(
      std::max_element(class_terms.begin(), class_terms.end()) - class_terms.begin());

  std::vector<double> terms(model.lambda().size());
  model.log_terms(log_y, log_bg, terms);
  const double log_total = log_sum_exp(terms);
  a.posterior_background = std::exp(terms[0] - log_total);
  double log_new = -std::numeric_limits<double>::infinity();
  if (terms.size() > 1) log_new = log_sum_exp(std::span<const double>(terms).subspan(1));
  a.is_new_class = log_new > terms[0];
  if (!a.is_new_class) a.class_label = bg.labels()[a.best_class];
  return a;
}

std::vector<Assignment> classify_batch(const FbModel& model, const Matrix& data,
                                       std::size_t workers) {
  std::vector<Assignment> out(data.rows());
  detail::parallel_for(data.rows(), workers,
                       [&](std::size_t i) { out[i] = classify(model, data.row(i), i); });
  return out;
}

std::string predicted_label(const Assignment& a, const std::string& new_label) {
  return a.is_new_class ? new_label : *a.class_label;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::size_t{0});
  return t;
}

std::size_t ConfusionMatrix::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ValidationError("label '" + label + "' not in confusion matrix");
  return static_cast<std::size_t>(it - labels.begin());
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm, const std::string& new_label) {
  const std::size_t nl = cm.index_of(new_label);
  const std::size_t k = cm.labels.size();
  Metrics m;
  std::size_t trace = 0, total = 0;
  std::size_t novel_total = 0, novel_flagged = 0, known_total = 0, known_unflagged = 0;
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t row_sum = std::accumulate(cm.counts[r].begin(), cm.counts[r].end(), std::size_t{0});
    trace += cm.counts[r][r];
    total += row_sum;
    if (row_sum > 0)
      m.per_class_accuracy[cm.labels[r]] =
          static_cast<double>(cm.counts[r][r]) / static_cast<double>(row_sum);
    if (r == nl) {
      novel_total += row_sum;
      novel_flagged += cm.counts[r][nl];
    } else {
      known_total += row_sum;
      known_unflagged += row_sum - cm.counts[r][nl];
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.overall_accuracy = total > 0 ? static_cast<double>(trace) / static_cast<double>(total) : nan;
  m.new_class_sensitivity =
      novel_total > 0 ? static_cast<double>(novel_flagged) / static_cast<double>(novel_total) : nan;
  m.new_class_specificity = known_total > 0 ? static_cast<double>(known_unflagged) /
                                                  static_cast<double>(known_total)
                                            : nan;
  return m;
}

Evaluation evaluate(std::span<const std::string> predicted, std::span<const std::string> truth,
                    const std::vector<std::string>& known_labels, const std::string& new_label,
                    const std::vector<std::string>& novel_truth_labels) {
  if (predicted.size() != truth.size())
    throw ValidationError("predictions and truth have different lengths");
  if (std::find(known_labels.begin(), known_labels.end(), new_label) != known_labels.end())
    throw ValidationError("new-class label '" + new_label + "' clashes with a known class");
  Evaluation ev;
  ev.confusion.labels = known_labels;
  ev.confusion.labels.push_back(new_label);
  const std::size_t k = ev.confusion.labels.size();
  ev.confusion.counts.assign(k, std::vector<std::size_t>(k, 0));

  auto truth_index = [&](const std::string& t) -> std::size_t {
    if (t == new_label ||
        std::find(novel_truth_labels.begin(), novel_truth_labels.end(), t) != novel_truth_labels.end())
      return k - 1;
    const auto it = std::find(known_labels.begin(), known_labels.end(), t);
    if (it == known_labels.end()) throw ValidationError("unknown truth label '" + t + "'");
    return static_cast<std::size_t>(it - known_labels.begin());
  };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t r = truth_index(truth[i]);
    const auto it = std::find(ev.confusion.labels.begin(), ev.confusion.labels.end(), predicted[i]);
    if (it == ev.confusion.labels.end())
      throw ValidationError("unknown predicted label '" + predicted[i] + "'");
    ++ev.confusion.counts[r][static_cast<std::size_t>(it - ev.confusion.labels.begin())];
  }
  ev.metrics = metrics_from_confusion(ev.confusion, new_label);
  return ev;
}

std::vector<std::vector<double>> signatures(const InnerMixture& m) {
  std::vector<std::vector<double>> out;
  for (const auto& c : m.components()) out.push_back(c.mean());
  return out;
}

}  // namespace tsdm
