#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hiermix/model.hpp"
#include "hiermix/priors.hpp"
#include "hiermix/random.hpp"

namespace hiermix {

/// Discrete choices of a group split. u[k] counts how many of the two halves of
/// component k go to the first child group; the singleton (odd totals only) is
/// kept whole and has u in {0, 2}.
struct SplitChoice {
  int k_total = 0;
  int k1 = 0;
  int k2 = 0;
  int singleton = -1;
  std::vector<int> u;
};

/// Continuous auxiliaries. For u = 1 the first half goes to the first child
/// group; for u in {0, 2} the first half is the lower one on coordinate 0.
struct SplitAux {
  double u0 = 0.5;
  std::vector<double> v;
  std::vector<std::vector<double>> y;
  std::vector<std::vector<double>> z;
};

struct SplitRecord {
  std::size_t group = 0;
  SplitChoice choice;
  SplitAux aux;
  int m0 = 0;
  std::size_t m1 = 0;
  double log_aux_density = 0.0;
  double log_jacobian = 0.0;
};

struct SplitContext {
  const Hyperparameters* hyper = nullptr;
  /// Proposal scale for the mean and variance auxiliaries, relative to the parent.
  double proposal_scale = 0.5;
  std::size_t enumeration_cap = 1u << 20;
};

std::vector<std::pair<int, int>> admissible_k_pairs(int k_total, const Hyperparameters& h);

struct UEnumeration {
  std::vector<std::vector<int>> vectors;
  bool capped = false;
};

UEnumeration admissible_u(const std::vector<double>& mixing, int k1, int singleton,
                          std::size_t cap);
bool u_admissible(const std::vector<double>& mixing, const SplitChoice& choice);

/// Children of a split: first and second child groups, before any re-sorting.
std::pair<GroupParams, GroupParams> apply_split(const GroupParams& g, const SplitChoice& choice,
                                                const SplitAux& aux);

/// Deterministic merge: sort all components by first mean coordinate, keep the
/// entry at even position `singleton_pos` whole when the total is odd, and merge
/// remaining adjacent pairs left to right by weighted averages.
GroupParams merge_groups(const GroupParams& a, const GroupParams& b, int singleton_pos);

/// Auxiliaries that map `merged` to (first, second) under apply_split.
/// Returns nullopt if the children cannot come from such a split.
std::optional<std::pair<SplitChoice, SplitAux>> invert_split(const GroupParams& merged,
                                                              const GroupParams& first,
                                                              const GroupParams& second,
                                                              int singleton_pos);

/// Log density of the split proposal given the parent group, excluding the
/// choice of the group itself. -inf outside the proposal support.
double split_aux_log_density(const GroupParams& merged, const SplitChoice& choice,
                             const SplitAux& aux, const SplitContext& ctx);
double split_log_jacobian(const GroupParams& merged, const SplitChoice& choice,
                          const SplitAux& aux);

/// log of the density of producing {a, b} from `merged` (aux density over |J|),
/// summed over the two role assignments; excludes the choice of the group.
double split_log_preimage_density(const GroupParams& merged, const GroupParams& a,
                                  const GroupParams& b, int singleton_pos,
                                  const SplitContext& ctx);

struct SplitSample {
  std::optional<SplitRecord> record;
  std::string failure;
};

/// Draws a split of group `g` (which has index `index` in its parameter set).
SplitSample sample_split(const GroupParams& g, std::size_t index, const SplitContext& ctx,
                         Rng& rng);

/// Analytic log|det J| of the full continuous split map against central finite
/// differences in a simplex chart. Returns the relative deviation of |det J|.
struct JacobianCheck {
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};
JacobianCheck jacobian_check_split(const GroupParams& g, const SplitChoice& choice,
                                   const SplitAux& aux, double step = 1e-5);

}  // namespace hiermix
