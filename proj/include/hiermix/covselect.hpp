#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hiermix/model.hpp"
#include "hiermix/random.hpp"

namespace hiermix {

enum class CovStructure : int { DiagTied = 0, DiagFree = 1, FullTied = 2, FullFree = 3 };
inline constexpr std::array<CovStructure, 4> kAllStructures = {
    CovStructure::DiagTied, CovStructure::DiagFree, CovStructure::FullTied, CovStructure::FullFree};

const char* structure_name(CovStructure s);

struct MixtureFit {
  CovStructure structure = CovStructure::DiagTied;
  int k = 1;
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;
  double log_likelihood = 0.0;
  int parameters = 0;
  double bic = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Some covariance eigenvalue was raised to the floor.
  bool floored = false;
  /// Log-likelihood after each E-step of the winning restart.
  std::vector<double> history;
};

struct EmOptions {
  int restarts = 10;
  int max_iterations = 500;
  double tolerance = 1e-8;
  double floor_factor = 1e-6;
};

int parameter_count(CovStructure s, int k, int d);
/// log L - (nu / 2) log n; higher is better.
double bic(const MixtureFit& fit, std::size_t n);

/// Best-of-restarts EM fit of a K-component Gaussian mixture to the rows of `points`.
MixtureFit fit_em(const Eigen::MatrixXd& points, int k, CovStructure s, Rng& rng,
                  const EmOptions& opts = {});

struct StructureRanking {
  std::array<double, 4> best_bic{};
  std::array<int, 4> best_k{};
  std::array<bool, 4> floored{};
  /// Structures sorted by descending best BIC (ties keep the simpler one first).
  std::array<CovStructure, 4> order{};
  CovStructure winner() const { return order[0]; }
};

/// Maximises BIC over K in [k_min, k_max] (capped at n - 1) for every structure.
StructureRanking select_structure(const Eigen::MatrixXd& points, int k_min, int k_max, Rng& rng,
                                  const EmOptions& opts = {});

struct ObjectSelection {
  std::string id;
  bool skipped = false;
  std::string note;
  StructureRanking ranking;
};

/// Per-object selection; objects with n_i <= k_min are skipped.
std::vector<ObjectSelection> select_batch(const Dataset& data, int k_min, int k_max,
                                          std::uint64_t seed, const EmOptions& opts = {});

Eigen::MatrixXd object_matrix(const Dataset& data, std::size_t i);

}  // namespace hiermix
