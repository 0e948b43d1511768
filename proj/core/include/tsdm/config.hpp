#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsdm/fb.hpp"
#include "tsdm/simplex_transform.hpp"
#include "tsdm/tsdm_model.hpp"

namespace tsdm {

/// Every tunable constant of the pipeline, loaded from one JSON file.
struct PipelineConfig {
  std::uint64_t seed = 0;
  int n_starts = 10;
  double epsilon = 1e-6;
  int max_iter = 500;
  std::size_t n_min = 3;
  std::vector<std::size_t> j_range{1, 2, 3, 4, 5};
  std::map<std::string, std::vector<std::size_t>> class_j_ranges;
  std::vector<std::size_t> new_class_j_range{1, 2, 3, 4, 5};
  /// Empty means Dir(1/K, ..., 1/K).
  std::vector<double> prior_e;
  double split_fraction = 0.7;
  double transform_clamp = 1e-6;
  double smoothing = 0.0;
  std::size_t max_knots = 200;
  std::size_t workers = 1;
  std::string new_class_label = "NEW";
  /// Truth labels that evaluate() counts as the new class.
  std::vector<std::string> novel_truth_labels;
  double init_quantile = 0.1;
  double init_lambda0 = 0.9;
  double lambda_floor = 1e-10;

  /// Throws ValidationError on non-positive counts or out-of-range values.
  void validate() const;

  EmConfig em_config() const;
  TsdmConfig tsdm_config() const;
  FbConfig fb_config() const;
  TransformOptions transform_options() const;
};

}  // namespace tsdm
