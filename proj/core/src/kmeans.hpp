#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "tsdm/matrix.hpp"

namespace tsdm::detail {

/// Lloyd's algorithm with k-means++ seeding. Returns a cluster index per
/// row; every cluster index below k is used at least once when the data has
/// at least k distinct rows.
std::vector<std::size_t> kmeans(const Matrix& data, std::size_t k, std::mt19937_64& rng,
                                int max_iter = 100);

}  // namespace tsdm::detail

#include "tsdm/dirichlet.hpp"

namespace tsdm::detail {

/// Moment-matched Dirichlet per cluster plus cluster proportions. Clusters
/// with fewer than two points fall back to the moments of the whole sample.
struct ClusterStart {
  std::vector<double> proportions;
  std::vector<DirichletParams> components;
};

ClusterStart cluster_moment_start(const Matrix& data, const std::vector<std::size_t>& labels,
                                  std::size_t k);

/// Multiplies every alpha by exp(N(0, sd^2)).
DirichletParams perturb(const DirichletParams& p, double sd, std::mt19937_64& rng);

}  // namespace tsdm::detail
