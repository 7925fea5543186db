#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "hiermix/model.hpp"
#include "hiermix/random.hpp"

namespace hiermix {

struct PrcQuery {
  unsigned w = 0;
  unsigned m = 0;
  unsigned n = 0;
  double r0 = 15.0;

  /// Throws std::invalid_argument when r0 <= 0; returns false when w > min(m, n).
  bool check() const;
};

struct PrcSummary {
  PrcQuery query;
  double level = 0.95;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t samples = 0;
  /// Samples whose match probability had to be clamped to 1.
  std::size_t clamped = 0;
  std::vector<double> values;
};

/// Closed-form probability that independent draws from q1 and q2 fall within
/// the axis-aligned cube of half-width r0: (2 r0)^d sum p p' prod_b phi(0 | dmu, s + s').
/// Clamped to [0, 1]; `clamped` reports whether the bound was active.
double match_probability(const GroupParams& q1, const GroupParams& q2, double r0,
                         bool* clamped = nullptr);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

enum class McMethod {
  /// Draw y ~ q2 and integrate x ~ q1 over the cube exactly.
  Conditional,
  /// Draw both points and count hits.
  HitOrMiss,
};

McEstimate match_probability_mc(const GroupParams& q1, const GroupParams& q2, double r0,
                                std::size_t n_samples, Rng& rng,
                                McMethod method = McMethod::Conditional);

double expected_matches(const GroupParams& q1, const GroupParams& q2, unsigned m, unsigned n,
                        double r0, bool* clamped = nullptr);

/// P(S >= w) for S ~ Poisson(lambda). Values below the double range return 0.
double poisson_tail(unsigned w, double lambda);

double mean_prc(const HierParams& theta, const PrcQuery& query, bool* clamped = nullptr);

/// Shortest interval containing ceil(level * n) of the sorted samples.
std::pair<double, double> hpd_interval(std::vector<double> samples, double level);

/// Mean PRC at every posterior sample, evaluated on up to `threads` workers
/// (0 = hardware concurrency); reduction runs in sample order.
PrcSummary posterior_prc(const std::vector<HierParams>& samples, const PrcQuery& query,
                         double level, unsigned threads = 0);

/// Cross pairs within the cube among m draws from q1 and n draws from q2.
unsigned simulate_match_count(const GroupParams& q1, const GroupParams& q2, unsigned m,
                              unsigned n, double r0, Rng& rng);

/// One draw from a group's mixture density.
std::vector<double> draw_from_group(const GroupParams& g, Rng& rng);

}  // namespace hiermix
