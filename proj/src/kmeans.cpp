#include "hiermix/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace hiermix {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

}  // namespace

std::vector<double> kmeanspp_seeds(const std::vector<double>& points, std::size_t d,
                                   std::size_t k, Rng& rng) {
  const std::size_t n = d ? points.size() / d : 0;
  if (n == 0 || k == 0) throw std::invalid_argument("kmeanspp_seeds: need points and k >= 1");
  std::vector<double> centers;
  centers.reserve(k * d);
  const std::size_t first = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * n));
  centers.insert(centers.end(), points.begin() + first * d, points.begin() + (first + 1) * d);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const double* last = centers.data() + (c - 1) * d;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(points.data() + i * d, last, d));
      total += best[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= best[pick];
        if (target <= 0.0) break;
      }
    } else {
      pick = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * n));
    }
    centers.insert(centers.end(), points.begin() + pick * d, points.begin() + (pick + 1) * d);
  }
  return centers;
}

KMeansResult kmeans(const std::vector<double>& points, std::size_t d, std::size_t k, Rng& rng,
                    int max_iterations) {
  const std::size_t n = d ? points.size() / d : 0;
  KMeansResult res;
  res.centers = kmeanspp_seeds(points, d, k, rng);
  res.assignment.assign(n, -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    res.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      int arg = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double dist = sq_dist(points.data() + i * d, res.centers.data() + c * d, d);
        if (dist < bestd) {
          bestd = dist;
          arg = static_cast<int>(c);
        }
      }
      if (res.assignment[i] != arg) changed = true;
      res.assignment[i] = arg;
      res.inertia += bestd;
    }
    std::vector<double> sums(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(res.assignment[i]);
      ++counts[c];
      for (std::size_t b = 0; b < d; ++b) sums[c * d + b] += points[i * d + b];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        std::size_t far = 0;
        double fard = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const auto a = static_cast<std::size_t>(res.assignment[i]);
          const double dist = sq_dist(points.data() + i * d, res.centers.data() + a * d, d);
          if (dist > fard) {
            fard = dist;
            far = i;
          }
        }
        std::copy(points.begin() + far * d, points.begin() + (far + 1) * d, res.centers.begin() + c * d);
        changed = true;
        continue;
      }
      for (std::size_t b = 0; b < d; ++b) res.centers[c * d + b] = sums[c * d + b] / static_cast<double>(counts[c]);
    }
    if (!changed) break;
  }
  return res;
}

}  // namespace hiermix
