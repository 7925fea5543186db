#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hiermix/sampler.hpp"

namespace hiermix {

/// Variance components of the tracked statistic at one checkpoint, all using
/// population (1/N) normalisation over the pooled draws.
struct DiagnosticPoint {
  std::size_t iteration = 0;
  std::size_t draws = 0;
  double v_hat = 0.0;
  double w_c = 0.0;
  double w_m = 0.0;
  double w_mw_c = 0.0;
  double b_m = 0.0;
  double b_mw_c = 0.0;
  /// Some chain-by-model cell held a single draw.
  bool sparse_cells = false;
};

enum class ModelGrouping { Full, GroupsOnly };

struct DiagnosticSeries {
  std::size_t chains = 0;
  ModelGrouping grouping = ModelGrouping::Full;
  std::vector<DiagnosticPoint> points;
};

struct DiagnosticOptions {
  std::size_t checkpoint_every = 10000;
  ModelGrouping grouping = ModelGrouping::Full;
  /// Only records with iteration > first_iteration are used.
  std::size_t first_iteration = 0;
};

/// Chains are truncated to the shortest; each checkpoint uses every draw with
/// iteration <= the checkpoint.
DiagnosticSeries compute_diagnostics(const std::vector<std::vector<MonitorRecord>>& chains,
                                     const DiagnosticOptions& opts);

struct ConvergenceReport {
  bool converged = false;
  std::string reason;
  /// Ratios W_c / V, W_mW_c / W_m and B_mW_c / B_m at the last checkpoint.
  double ratio_chain = 1.0;
  double ratio_model = 1.0;
  double ratio_between = 1.0;
};

ConvergenceReport converged(const DiagnosticSeries& series, std::size_t window = 5,
                            double tol = 0.05);

}  // namespace hiermix
