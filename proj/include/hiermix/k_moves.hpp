#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "hiermix/model.hpp"
#include "hiermix/random.hpp"

namespace hiermix {

/// Auxiliaries of a component split: u1 splits the probability, and per
/// coordinate u2 splits the mean (positive on coordinate 0) and u3 the variance.
struct KSplitAux {
  std::size_t component = 0;
  double u1 = 0.5;
  std::vector<double> u2;
  std::vector<double> u3;
};

KSplitAux sample_k_split_aux(const GroupParams& g, std::size_t component, Rng& rng);
double k_split_aux_log_density(const KSplitAux& aux);

/// Replaces component j by two adjacent components. Returns nullopt when the new
/// first-coordinate means would break the ordering against the neighbours.
std::optional<GroupParams> k_split(const GroupParams& g, const KSplitAux& aux);

/// Moment-matching merge of components j and j+1.
GroupParams k_merge(const GroupParams& g, std::size_t j);

/// Auxiliaries that split `k_merge(g, j)` back into g. Returns nullopt if they
/// fall outside the support (|u2| >= 1, u3 outside (0, 1)).
std::optional<KSplitAux> k_merge_aux(const GroupParams& g, std::size_t j);

/// log|det J| of the map (p, mu, s, u1, u2, u3) -> (p1, p2, mu1, mu2, s1, s2).
double k_split_log_jacobian(const GroupParams& before, const KSplitAux& aux);

/// Central finite-difference determinant of the same map.
double k_split_numeric_log_jacobian(const GroupParams& before, const KSplitAux& aux,
                                    double step = 1e-5);

}  // namespace hiermix
