#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "tsdm/dirichlet.hpp"
#include "tsdm/inner_em.hpp"
#include "tsdm/matrix.hpp"
#include "tsdm/synth.hpp"

namespace testing {

/// n points from a mixture, in generation order.
inline tsdm::Matrix sample_mixture(const tsdm::MixtureSpec& spec, std::size_t n, std::uint64_t seed) {
  tsdm::SynthSpec s;
  s.classes.push_back({"c", n, spec});
  s.seed = seed;
  return tsdm::generate(s).data.points;
}

inline tsdm::Matrix random_simplex_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return tsdm::sample(tsdm::DirichletParams(std::vector<double>(dim, 1.0)), seed, n);
}

/// Best permutation of fitted components onto true ones by mean distance.
inline std::vector<std::size_t> match_components(const std::vector<std::vector<double>>& fitted,
                                                 const std::vector<std::vector<double>>& truth) {
  std::vector<std::size_t> perm(truth.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_cost = INFINITY;
  do {
    double cost = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j)
      for (std::size_t d = 0; d < truth[j].size(); ++d)
        cost = std::max(cost, std::abs(fitted[perm[j]][d] - truth[j][d]));
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::vector<std::vector<double>> means(const std::vector<std::vector<double>>& alphas) {
  std::vector<std::vector<double>> out;
  for (const auto& a : alphas) out.push_back(tsdm::DirichletParams(a).mean());
  return out;
}

}  // namespace testing
