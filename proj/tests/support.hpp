#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "hiermix/model.hpp"
#include "hiermix/random.hpp"

namespace hiermix::testing {

/// Simplex point with every entry at least `floor`.
inline std::vector<double> random_simplex(std::size_t k, Rng& rng, double floor = 0.02) {
  std::vector<double> alpha(k, 1.0);
  std::vector<double> p = dirichlet_draw(alpha, rng);
  const double scale = 1.0 - floor * static_cast<double>(k);
  for (double& x : p) x = floor + scale * x;
  return p;
}

/// Group with K components, strictly ascending first-coordinate means.
inline GroupParams random_group(std::size_t k, std::size_t d, Rng& rng, double spread = 10.0) {
  GroupParams g;
  g.mixing = random_simplex(k, rng);
  std::vector<double> first(k);
  for (double& x : first) x = spread * (2.0 * uniform01(rng) - 1.0);
  std::sort(first.begin(), first.end());
  for (std::size_t j = 1; j < k; ++j) {
    if (first[j] <= first[j - 1]) first[j] = first[j - 1] + 1e-3;
  }
  for (std::size_t j = 0; j < k; ++j) {
    ComponentParams c;
    c.mean.push_back(first[j]);
    c.var.push_back(0.2 + 2.0 * uniform01(rng));
    for (std::size_t b = 1; b < d; ++b) {
      c.mean.push_back(spread * (2.0 * uniform01(rng) - 1.0));
      c.var.push_back(0.2 + 2.0 * uniform01(rng));
    }
    g.components.push_back(std::move(c));
  }
  return g;
}

/// Valid parameter set with the given component counts (weights strictly ascending).
inline HierParams random_theta(const std::vector<std::size_t>& counts, std::size_t d, Rng& rng) {
  HierParams theta;
  std::vector<double> w;
  do {
    w = random_simplex(counts.size(), rng, 0.05);
    std::sort(w.begin(), w.end());
  } while (std::adjacent_find(w.begin(), w.end()) != w.end());
  for (std::size_t g = 0; g < counts.size(); ++g) {
    theta.groups.push_back(random_group(counts[g], d, rng));
    theta.groups.back().weight = w[g];
  }
  return theta;
}

inline GroupParams single(double m0, double m1, double v0, double v1) {
  GroupParams g;
  g.mixing = {1.0};
  g.components = {{{m0, m1}, {v0, v1}}};
  return g;
}

inline double rel_diff(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / scale;
}

}  // namespace hiermix::testing
