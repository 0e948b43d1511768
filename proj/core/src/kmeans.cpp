#include "kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tsdm/errors.hpp"

namespace tsdm::detail {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

}  // namespace

std::vector<std::size_t> kmeans(const Matrix& data, std::size_t k, std::mt19937_64& rng,
                                int max_iter) {
  const std::size_t n = data.rows();
  if (k == 0 || n < k) throw ValidationError("k-means needs at least k points");
  std::vector<std::size_t> label(n, 0);
  if (k == 1) return label;

  Matrix centers(k, data.cols());
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy(data.row(first).begin(), data.row(first).end(), centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(data.row(i), centers.row(c - 1)));
      total += best[i];
    }
    std::size_t chosen = pick(rng);
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        target -= best[i];
        if (target <= 0.0) {
          chosen = i;
          break;
        }
      }
    }
    std::copy(data.row(chosen).begin(), data.row(chosen).end(), centers.row(c).begin());
  }

  std::vector<std::size_t> counts(k);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double dmin = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(data.row(i), centers.row(c));
        if (d < dmin) {
          dmin = d;
          arg = c;
        }
      }
      if (label[i] != arg) {
        label[i] = arg;
        changed = true;
      }
    }
    if (!changed) break;
    centers = Matrix(k, data.cols());
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[label[i]];
      auto row = data.row(i);
      auto ctr = centers.row(label[i]);
      for (std::size_t d = 0; d < row.size(); ++d) ctr[d] += row[d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point farthest from its center.
        std::size_t far = 0;
        double dmax = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = sq_dist(data.row(i), centers.row(label[i]));
          if (d > dmax) {
            dmax = d;
            far = i;
          }
        }
        std::copy(data.row(far).begin(), data.row(far).end(), centers.row(c).begin());
        continue;
      }
      for (double& v : centers.row(c)) v /= static_cast<double>(counts[c]);
    }
  }
  return label;
}

}  // namespace tsdm::detail

namespace tsdm::detail {

ClusterStart cluster_moment_start(const Matrix& data, const std::vector<std::size_t>& labels,
                                  std::size_t k) {
  ClusterStart start;
  const std::vector<double> all(data.rows(), 1.0);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> w(data.rows(), 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
      if (labels[i] == c) {
        w[i] = 1.0;
        ++count;
      }
    }
    start.proportions.push_back(static_cast<double>(std::max<std::size_t>(count, 1)));
    start.components.push_back(count >= 2 ? method_of_moments(data, w)
                                          : method_of_moments(data, all));
  }
  double total = 0.0;
  for (double p : start.proportions) total += p;
  for (double& p : start.proportions) p /= total;
  return start;
}

DirichletParams perturb(const DirichletParams& p, double sd, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, sd);
  std::vector<double> alpha(p.alpha().begin(), p.alpha().end());
  for (double& a : alpha) a *= std::exp(noise(rng));
  return DirichletParams(std::move(alpha));
}

}  // namespace tsdm::detail
