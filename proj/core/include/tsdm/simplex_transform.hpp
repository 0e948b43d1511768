#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tsdm/matrix.hpp"
#include "tsdm/spline.hpp"

namespace tsdm {

struct TransformOptions {
  /// Roughness penalty of the logit-scale smoother; 0 interpolates the
  /// plotting positions exactly.
  double smoothing = 0.0;
  /// Knot cap used when smoothing > 0 (equispaced quantiles beyond it).
  std::size_t max_knots = 200;
  /// Smoothed probabilities are clamped to [clamp, 1 - clamp].
  double clamp = 1e-6;
};

/// Monotone map from one raw attribute to a probability in (0, 1):
/// a natural cubic spline of logit(plotting position) against raw value.
class AttributeMap {
 public:
  AttributeMap(std::string name, CubicSpline logit_spline, double clamp);

  const std::string& name() const noexcept { return name_; }
  const CubicSpline& logit_spline() const noexcept { return spline_; }
  double clamp() const noexcept { return clamp_; }

  double logit(double raw) const { return spline_.evaluate(raw); }
  double probability(double raw) const;

  bool operator==(const AttributeMap&) const = default;

 private:
  std::string name_;
  CubicSpline spline_;
  double clamp_;
};

/// Average-rank plotting positions rank / (n + 1); tied values share the
/// mean of their ranks.
std::vector<double> plotting_positions(std::span<const double> values);

/// Fits one attribute map. Throws ValidationError on a constant attribute.
AttributeMap fit_attribute_map(std::string name, std::span<const double> values,
                               const TransformOptions& options = {});

/// Maps D-1 raw attributes onto the D-simplex: each attribute goes through
/// its probability map, a final coordinate (D-1) - sum F_j is appended and
/// the vector is divided by D-1.
class SimplexTransform {
 public:
  explicit SimplexTransform(std::vector<AttributeMap> maps);

  /// Fits one map per column of `raw` (n x (D-1)).
  static SimplexTransform fit(const Matrix& raw, const std::vector<std::string>& names,
                              const TransformOptions& options = {});

  std::size_t attribute_count() const noexcept { return maps_.size(); }
  std::size_t simplex_dim() const noexcept { return maps_.size() + 1; }
  const std::vector<AttributeMap>& maps() const noexcept { return maps_; }
  std::vector<std::string> attribute_names() const;

  /// Smoothed probabilities for one raw row.
  std::vector<double> probabilities(std::span<const double> raw_row) const;

  std::vector<double> apply(std::span<const double> raw_row) const;
  Matrix apply_batch(const Matrix& raw) const;

  bool operator==(const SimplexTransform&) const = default;

 private:
  std::vector<AttributeMap> maps_;
};

/// Appends the balancing coordinate to probabilities F_1..F_{D-1} and
/// normalizes by D-1.
std::vector<double> probabilities_to_simplex(std::span<const double> probabilities);

}  // namespace tsdm
