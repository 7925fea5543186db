#include "hiermix/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hiermix/special.hpp"

namespace hiermix {

void Hyperparameters::check() const {
  if (!(delta_weight > 0.0) || !(delta_mixing > 0.0)) {
    throw std::invalid_argument("hyperparameters: Dirichlet concentrations must be positive");
  }
  if (g_min < 1 || g_min > g_max) throw std::invalid_argument("hyperparameters: need 1 <= g_min <= g_max");
  if (k_min < 1 || k_min > k_max) throw std::invalid_argument("hyperparameters: need 1 <= k_min <= k_max");
  if (mu0.empty() || mu0.size() != tau2.size()) {
    throw std::invalid_argument("hyperparameters: mu0 and tau2 must be non-empty and equal length");
  }
  for (std::size_t b = 0; b < mu0.size(); ++b) {
    if (!std::isfinite(mu0[b])) throw std::invalid_argument("hyperparameters: mu0 must be finite");
    if (!(tau2[b] > 0.0) || !std::isfinite(tau2[b])) throw std::invalid_argument("hyperparameters: tau2 must be positive");
  }
  if (!(alpha0 > 0.0) || !(beta0 > 0.0) || !std::isfinite(alpha0) || !std::isfinite(beta0)) {
    throw std::invalid_argument("hyperparameters: alpha0 and beta0 must be positive");
  }
}

Hyperparameters default_hyperparameters(const Dataset& data) {
  Hyperparameters h;
  const std::size_t d = data.dimension;
  const std::size_t total = data.total_points();
  if (total < 2) {
    h.mu0.assign(d, 0.0);
    h.tau2.assign(d, 1.0);
    h.alpha0 = 3.0;
    h.beta0 = 2.0;
    h.source = "prior-only-default";
    return h;
  }
  std::vector<double> sum(d, 0.0), lo(d, INFINITY), hi(d, -INFINITY);
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    for (std::size_t j = 0; j < data.num_points(i); ++j) {
      const Point x = data.point(i, j);
      for (std::size_t b = 0; b < d; ++b) {
        sum[b] += x[b];
        lo[b] = std::min(lo[b], x[b]);
        hi[b] = std::max(hi[b], x[b]);
      }
    }
  }
  h.mu0.resize(d);
  for (std::size_t b = 0; b < d; ++b) h.mu0[b] = sum[b] / static_cast<double>(total);
  std::vector<double> ss(d, 0.0);
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    for (std::size_t j = 0; j < data.num_points(i); ++j) {
      const Point x = data.point(i, j);
      for (std::size_t b = 0; b < d; ++b) ss[b] += (x[b] - h.mu0[b]) * (x[b] - h.mu0[b]);
    }
  }
  h.tau2.resize(d);
  double mean_var = 0.0;
  for (std::size_t b = 0; b < d; ++b) {
    const double range = hi[b] - lo[b];
    h.tau2[b] = range > 0.0 ? range * range : 1.0;
    mean_var += ss[b] / static_cast<double>(total);
  }
  mean_var /= static_cast<double>(d);
  h.alpha0 = 3.0;
  h.beta0 = (h.alpha0 - 1.0) * (mean_var > 0.0 ? mean_var : 1.0);
  h.source = "data-default";
  return h;
}

double log_inverse_gamma_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) throw std::invalid_argument("log_inverse_gamma_pdf: nonpositive argument");
  return shape * std::log(scale) - log_gamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double log_symmetric_dirichlet_pdf(const std::vector<double>& x, double alpha) {
  const std::size_t k = x.size();
  if (k <= 1) return 0.0;
  double acc = log_gamma(alpha * static_cast<double>(k)) - static_cast<double>(k) * log_gamma(alpha);
  if (alpha != 1.0) {
    for (double v : x) acc += (alpha - 1.0) * std::log(v);
  }
  return acc;
}

double log_prior_model_size(int g, const std::vector<int>& k, const Hyperparameters& h) {
  if (g < h.g_min || g > h.g_max || static_cast<int>(k.size()) != g) return kNegInf;
  for (int kg : k) {
    if (kg < h.k_min || kg > h.k_max) return kNegInf;
  }
  return -std::log(static_cast<double>(h.g_max - h.g_min + 1)) -
         static_cast<double>(g) * std::log(static_cast<double>(h.k_max - h.k_min + 1));
}

double log_prior_weights(const HierParams& theta, const Hyperparameters& h) {
  const std::size_t g = theta.num_groups();
  std::vector<double> w(g);
  for (std::size_t i = 0; i < g; ++i) {
    w[i] = theta.groups[i].weight;
    if (i > 0 && !(w[i - 1] < w[i])) return kNegInf;
  }
  double acc = log_factorial(static_cast<unsigned>(g)) + log_symmetric_dirichlet_pdf(w, h.delta_weight);
  for (const auto& group : theta.groups) acc += log_symmetric_dirichlet_pdf(group.mixing, h.delta_mixing);
  return acc;
}

namespace {

double group_mean_terms(const GroupParams& group, const Hyperparameters& h) {
  double acc = log_factorial(static_cast<unsigned>(group.size()));
  for (std::size_t k = 0; k < group.size(); ++k) {
    const auto& mu = group.components[k].mean;
    if (k > 0 && !(group.components[k - 1].mean[0] < mu[0])) return kNegInf;
    for (std::size_t b = 0; b < mu.size(); ++b) acc += log_normal_pdf(mu[b], h.mu0[b], h.tau2[b]);
  }
  return acc;
}

double group_variance_terms(const GroupParams& group, const Hyperparameters& h) {
  double acc = 0.0;
  for (const auto& c : group.components) {
    for (double v : c.var) acc += log_inverse_gamma_pdf(v, h.alpha0, h.beta0);
  }
  return acc;
}

}  // namespace

double log_prior_means(const HierParams& theta, const Hyperparameters& h) {
  double acc = 0.0;
  for (const auto& group : theta.groups) acc += group_mean_terms(group, h);
  return acc;
}

double log_prior_variances(const HierParams& theta, const Hyperparameters& h) {
  double acc = 0.0;
  for (const auto& group : theta.groups) acc += group_variance_terms(group, h);
  return acc;
}

double log_prior(const HierParams& theta, const Hyperparameters& h) {
  const double size = log_prior_model_size(static_cast<int>(theta.num_groups()),
                                           theta.component_counts(), h);
  if (std::isinf(size)) return kNegInf;
  const double weights = log_prior_weights(theta, h);
  if (std::isinf(weights)) return kNegInf;
  const double means = log_prior_means(theta, h);
  if (std::isinf(means)) return kNegInf;
  return size + weights + means + log_prior_variances(theta, h);
}

double log_prior_global_block(const HierParams& theta, const Hyperparameters& h) {
  const int g = static_cast<int>(theta.num_groups());
  if (g < h.g_min || g > h.g_max) return kNegInf;
  std::vector<double> w(theta.num_groups());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = theta.groups[i].weight;
    if (i > 0 && !(w[i - 1] < w[i])) return kNegInf;
  }
  return -std::log(static_cast<double>(h.g_max - h.g_min + 1)) +
         log_factorial(static_cast<unsigned>(g)) + log_symmetric_dirichlet_pdf(w, h.delta_weight);
}

double log_prior_group_block(const GroupParams& group, const Hyperparameters& h) {
  const int k = static_cast<int>(group.size());
  if (k < h.k_min || k > h.k_max) return kNegInf;
  const double means = group_mean_terms(group, h);
  if (std::isinf(means)) return kNegInf;
  return -std::log(static_cast<double>(h.k_max - h.k_min + 1)) +
         log_symmetric_dirichlet_pdf(group.mixing, h.delta_mixing) + means +
         group_variance_terms(group, h);
}

double log_prior_labels(const Labels& labels, const HierParams& theta) {
  double acc = 0.0;
  for (std::size_t i = 0; i < labels.group.size(); ++i) {
    const int g = labels.group[i];
    if (g < 0 || static_cast<std::size_t>(g) >= theta.num_groups()) {
      throw std::out_of_range("log_prior_labels: group label out of range");
    }
    const GroupParams& group = theta.groups[static_cast<std::size_t>(g)];
    acc += std::log(group.weight);
    if (i >= labels.component.size()) continue;
    for (int z : labels.component[i]) {
      if (z < 0 || static_cast<std::size_t>(z) >= group.size()) {
        throw std::out_of_range("log_prior_labels: component label out of range");
      }
      acc += std::log(group.mixing[static_cast<std::size_t>(z)]);
    }
  }
  return acc;
}

}  // namespace hiermix
