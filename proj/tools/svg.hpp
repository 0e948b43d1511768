#pragma once

#include <string>
#include <vector>

#include "tsdm/classify.hpp"

namespace tsdm::cli {

struct SignatureSeries {
  std::string name;
  std::vector<double> values;
};

/// Broken-line plot of normalized means, one polyline per series.
std::string signature_svg(const std::vector<SignatureSeries>& series,
                          const std::vector<std::string>& axis_labels);

/// Heat map of a confusion matrix, rows normalized.
std::string confusion_svg(const ConfusionMatrix& cm);

}  // namespace tsdm::cli
