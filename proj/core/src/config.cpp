#include "tsdm/config.hpp"

#include "tsdm/errors.hpp"

namespace tsdm {

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("config: ") + what);
  };
  require(n_starts >= 1, "n_starts must be positive");
  require(epsilon > 0.0, "epsilon must be positive");
  require(max_iter >= 1, "max_iter must be positive");
  require(n_min >= 1, "n_min must be positive");
  require(!j_range.empty(), "j_range must not be empty");
  require(!new_class_j_range.empty(), "new_class_j_range must not be empty");
  for (std::size_t j : j_range) require(j >= 1, "j_range entries must be positive");
  for (std::size_t j : new_class_j_range) require(j >= 1, "new_class_j_range entries must be positive");
  for (const auto& [label, range] : class_j_ranges) {
    require(!range.empty(), "class_j_ranges entries must not be empty");
    for (std::size_t j : range) require(j >= 1, "class_j_ranges entries must be positive");
  }
  for (double e : prior_e) require(e > 0.0, "prior_e entries must be positive");
  require(split_fraction > 0.0 && split_fraction < 1.0, "split_fraction must lie in (0,1)");
  require(transform_clamp > 0.0 && transform_clamp < 0.5, "transform_clamp must lie in (0,0.5)");
  require(smoothing >= 0.0, "smoothing must be non-negative");
  require(max_knots >= 2, "max_knots must be at least 2");
  require(workers >= 1, "workers must be positive");
  require(!new_class_label.empty(), "new_class_label must not be empty");
  require(init_quantile > 0.0 && init_quantile <= 1.0, "init_quantile must lie in (0,1]");
  require(init_lambda0 > 0.0 && init_lambda0 < 1.0, "init_lambda0 must lie in (0,1)");
  require(lambda_floor >= 0.0 && lambda_floor < 1e-2, "lambda_floor must lie in [0,0.01)");
}

EmConfig PipelineConfig::em_config() const {
  EmConfig em;
  em.n_min = n_min;
  em.epsilon = epsilon;
  em.max_iter = max_iter;
  em.n_starts = n_starts;
  em.seed = seed;
  em.workers = workers;
  return em;
}

TsdmConfig PipelineConfig::tsdm_config() const {
  TsdmConfig c;
  c.em = em_config();
  c.j_range = j_range;
  c.class_j_ranges = class_j_ranges;
  c.prior_e = prior_e;
  return c;
}

FbConfig PipelineConfig::fb_config() const {
  FbConfig c;
  c.em = em_config();
  c.j_range = new_class_j_range;
  c.init_quantile = init_quantile;
  c.init_lambda0 = init_lambda0;
  c.lambda_floor = lambda_floor;
  return c;
}

TransformOptions PipelineConfig::transform_options() const {
  TransformOptions t;
  t.smoothing = smoothing;
  t.max_knots = max_knots;
  t.clamp = transform_clamp;
  return t;
}

}  // namespace tsdm
