#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hiermix/model.hpp"
#include "hiermix/priors.hpp"
#include "hiermix/random.hpp"
#include "hiermix/split_merge.hpp"

namespace hiermix {

struct SamplerConfig {
  std::size_t iterations = 10000;
  std::size_t burn_in = 1000;
  std::size_t thin = 10;
  /// Spacing of the monitor stream (log-likelihood and model indicator), burn-in
  /// included. Zero means the thinning interval.
  std::size_t monitor_every = 0;
  std::uint64_t seed = 0;
  /// Within-step move probabilities; split + merge <= 1, the remainder is "no move".
  double g_split = 0.5;
  double g_merge = 0.5;
  double k_split = 0.5;
  double k_merge = 0.5;
  double proposal_scale = 0.5;
  std::size_t enumeration_cap = 1u << 20;
  /// Recompute cached densities after every step and fail on drift above 1e-8.
  bool verify = false;
  int initial_groups = 2;
  int initial_components = 2;

  std::size_t monitor_interval() const { return monitor_every ? monitor_every : thin; }
  /// Throws std::invalid_argument on inconsistent settings.
  void check() const;
};

enum class Move : int { GSplit = 0, GMerge = 1, KSplit = 2, KMerge = 3 };
inline constexpr std::array<const char*, 4> kMoveNames = {"g_split", "g_merge", "k_split", "k_merge"};

struct MoveStats {
  std::array<std::uint64_t, 4> proposed{};
  std::array<std::uint64_t, 4> accepted{};
  /// Proposals rejected before evaluating the ratio (bounds, empty support).
  std::array<std::uint64_t, 4> blocked{};

  double rate(Move m) const;
};

struct ChainState {
  HierParams theta;
  Labels labels;
  double log_prior = 0.0;
  /// Label prior plus augmented log-likelihood.
  double log_complete = 0.0;

  double log_posterior() const { return log_prior + log_complete; }
};

struct TraceSample {
  std::size_t iteration = 0;
  HierParams theta;
  double log_likelihood = 0.0;
  double log_posterior = 0.0;
};

struct MonitorRecord {
  std::size_t iteration = 0;
  double log_likelihood = 0.0;
  std::vector<int> k;  // model indicator: G = k.size()
};

struct ChainTrace {
  std::uint64_t seed = 0;
  std::size_t chain = 0;
  SamplerConfig config;
  Hyperparameters hyper;
  std::optional<Standardization> standardization;
  std::vector<TraceSample> samples;
  std::vector<MonitorRecord> monitor;
  MoveStats stats;
};

struct ProgressRecord {
  std::size_t chain = 0;
  std::size_t iteration = 0;
  double log_likelihood = 0.0;
  std::vector<int> k;
  const MoveStats* stats = nullptr;
};

using ProgressFn = std::function<void(const ProgressRecord&)>;

/// Full recomputation of both cached terms.
void refresh(ChainState& s, const Dataset& data, const Hyperparameters& h);

/// Clustering-based start (k-means on object summaries, then per group on
/// pooled points) followed by one Gibbs sweep; prior draw when there is no data.
ChainState initialize_state(const Dataset& data, const Hyperparameters& h,
                            const SamplerConfig& cfg, Rng& rng);

/// Metropolis-Hastings decision; throws NumericalError on a NaN ratio.
bool accept(double log_alpha, Rng& rng, const std::string& context);

bool g_split_step(ChainState& s, const Dataset& data, const Hyperparameters& h,
                  const SamplerConfig& cfg, Rng& rng, MoveStats& stats);
bool g_merge_step(ChainState& s, const Dataset& data, const Hyperparameters& h,
                  const SamplerConfig& cfg, Rng& rng, MoveStats& stats);
bool k_split_step(ChainState& s, std::size_t group, const Dataset& data,
                  const Hyperparameters& h, const SamplerConfig& cfg, Rng& rng, MoveStats& stats);
bool k_merge_step(ChainState& s, std::size_t group, const Dataset& data,
                  const Hyperparameters& h, const SamplerConfig& cfg, Rng& rng, MoveStats& stats);

void gibbs_update_weights(ChainState& s, const Hyperparameters& h, Rng& rng);
void gibbs_update_labels(ChainState& s, const Dataset& data, Rng& rng);
void gibbs_update_components(ChainState& s, const Dataset& data, const Hyperparameters& h, Rng& rng);

/// One full cycle: G move, K move in every group, then the three Gibbs steps.
void sweep(ChainState& s, const Dataset& data, const Hyperparameters& h,
           const SamplerConfig& cfg, Rng& rng, MoveStats& stats);

ChainTrace run_chain(const Dataset& data, const Hyperparameters& h, const SamplerConfig& cfg,
                     std::size_t chain_index, const std::optional<ChainState>& init = std::nullopt,
                     const ProgressFn& progress = {});

}  // namespace hiermix
