#include "tsdm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

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

std::size_t draw_component(const InnerMixture& m, std::mt19937_64& rng) {
  std::discrete_distribution<std::size_t> pick(m.weights().begin(), m.weights().end());
  return pick(rng);
}

}  // namespace

InnerMixture MixtureSpec::to_mixture() const {
  std::vector<DirichletParams> comps;
  for (const auto& a : alphas) comps.emplace_back(a);
  return InnerMixture(weights, std::move(comps));
}

std::size_t SynthSpec::dim() const {
  if (classes.empty() || classes.front().mixture.alphas.empty())
    throw ValidationError("synthetic spec has no classes");
  return classes.front().mixture.alphas.front().size();
}

void SynthSpec::validate() const {
  if (classes.empty()) throw ValidationError("synthetic spec needs at least one class");
  const std::size_t d = dim();
  std::set<std::string> labels;
  for (const auto& c : classes) {
    if (c.size < 1) throw ValidationError("class '" + c.label + "' must have size >= 1");
    if (!labels.insert(c.label).second)
      throw ValidationError("duplicate class label '" + c.label + "'");
    const InnerMixture m = c.mixture.to_mixture();
    if (m.dim() != d) throw ValidationError("class '" + c.label + "' has the wrong dimension");
  }
  if (novelty) {
    if (!n_total) throw ValidationError("a novelty component requires n_total");
    if (!(novelty->rate >= 0.0 && novelty->rate < 1.0))
      throw ValidationError("novelty rate must lie in [0,1)");
    if (labels.count(novelty->label))
      throw ValidationError("novelty label '" + novelty->label + "' clashes with a class");
    if (novelty->mixture.to_mixture().dim() != d)
      throw ValidationError("novelty mixture has the wrong dimension");
  }
  if (n_total && *n_total == 0) throw ValidationError("n_total must be at least 1");
}

SynthResult generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t d = spec.dim();
  std::vector<InnerMixture> mixtures;
  for (const auto& c : spec.classes) mixtures.push_back(c.mixture.to_mixture());
  std::optional<InnerMixture> novel;
  if (spec.novelty) novel = spec.novelty->mixture.to_mixture();

  std::mt19937_64 rng(spec.seed);
  SynthResult out;
  std::vector<double> y(d);
  auto emit = [&](std::size_t k, bool is_novel) {
    const InnerMixture& m = is_novel ? *novel : mixtures[k];
    const std::size_t j = draw_component(m, rng);
    sample_one(m.components()[j], rng, y);
    out.data.points.append_row(y);
    const std::string& label = is_novel ? spec.novelty->label : spec.classes[k].label;
    out.data.labels.push_back(label);
    out.hidden.push_back({label, is_novel, j});
  };

  if (!spec.n_total) {
    for (std::size_t k = 0; k < spec.classes.size(); ++k)
      for (std::size_t i = 0; i < spec.classes[k].size; ++i) emit(k, false);
    return out;
  }
  std::vector<double> sizes;
  for (const auto& c : spec.classes) sizes.push_back(static_cast<double>(c.size));
  std::discrete_distribution<std::size_t> pick_class(sizes.begin(), sizes.end());
  std::bernoulli_distribution is_novel(spec.novelty ? spec.novelty->rate : 0.0);
  for (std::size_t i = 0; i < *spec.n_total; ++i) {
    const bool nov = spec.novelty && is_novel(rng);
    emit(nov ? 0 : pick_class(rng), nov);
  }
  return out;
}

double true_log_likelihood(const SynthSpec& spec, const Matrix& data) {
  spec.validate();
  if (data.rows() == 0) return 0.0;
  if (data.cols() != spec.dim()) throw ValidationError("data dimension does not match spec");
  double total_size = 0.0;
  for (const auto& c : spec.classes) total_size += static_cast<double>(c.size);
  const double rate = spec.novelty ? spec.novelty->rate : 0.0;

  std::vector<InnerMixture> mixtures;
  std::vector<double> log_weights;
  for (const auto& c : spec.classes) {
    mixtures.push_back(c.mixture.to_mixture());
    log_weights.push_back(std::log1p(-rate) + std::log(static_cast<double>(c.size) / total_size));
  }
  if (spec.novelty && rate > 0.0) {
    mixtures.push_back(spec.novelty->mixture.to_mixture());
    log_weights.push_back(std::log(rate));
  }
  const Matrix logs = log_coordinates(data);
  std::vector<double> terms(mixtures.size());
  double ll = 0.0;
  for (std::size_t i = 0; i < logs.rows(); ++i) {
    for (std::size_t k = 0; k < mixtures.size(); ++k)
      terms[k] = log_weights[k] + mixtures[k].log_density_from_logs(logs.row(i));
    ll += log_sum_exp(terms);
  }
  return ll;
}

}  // namespace tsdm
