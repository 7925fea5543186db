#pragma once

#include <cstddef>
#include <vector>

#include "hiermix/random.hpp"

namespace hiermix {

struct KMeansResult {
  std::vector<double> centers;  // k x d row-major
  std::vector<int> assignment;
  double inertia = 0.0;
};

/// Lloyd's algorithm with k-means++ seeding on n points of dimension d (row-major).
/// Empty clusters are reseeded at the point farthest from its center.
KMeansResult kmeans(const std::vector<double>& points, std::size_t d, std::size_t k, Rng& rng,
                    int max_iterations = 100);

/// k-means++ seed centers only.
std::vector<double> kmeanspp_seeds(const std::vector<double>& points, std::size_t d,
                                   std::size_t k, Rng& rng);

}  // namespace hiermix
