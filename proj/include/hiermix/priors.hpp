#pragma once

#include <string>
#include <vector>

#include "hiermix/model.hpp"

namespace hiermix {

struct Hyperparameters {
  double delta_weight = 1.0;
  double delta_mixing = 1.0;
  int g_min = 1;
  int g_max = 10;
  int k_min = 1;
  int k_max = 10;
  /// Per-dimension prior mean and variance for component means.
  std::vector<double> mu0;
  std::vector<double> tau2;
  /// Inverse-gamma shape and scale for every component variance.
  double alpha0 = 3.0;
  double beta0 = 1.0;
  /// How the values were obtained ("data-default", "prior-only-default", "file", ...).
  std::string source = "user";

  std::size_t dimension() const { return mu0.size(); }
  /// Throws std::invalid_argument describing the first violated constraint.
  void check() const;
};

/// Scale-adapted defaults. With an empty dataset, fixed unit-scale values are used.
Hyperparameters default_hyperparameters(const Dataset& data);

double log_prior_model_size(int g, const std::vector<int>& k, const Hyperparameters& h);
double log_prior_weights(const HierParams& theta, const Hyperparameters& h);
double log_prior_means(const HierParams& theta, const Hyperparameters& h);
double log_prior_variances(const HierParams& theta, const Hyperparameters& h);
double log_prior(const HierParams& theta, const Hyperparameters& h);
double log_prior_labels(const Labels& labels, const HierParams& theta);

/// log InvGamma(x | shape, scale) under the shape-scale convention.
double log_inverse_gamma_pdf(double x, double shape, double scale);
/// log Dirichlet(x | alpha 1_K).
double log_symmetric_dirichlet_pdf(const std::vector<double>& x, double alpha);

/// Prior terms attached to group g alone: the K_g size prior, p_g Dirichlet,
/// the K_g! ordering constant, mean and variance densities.
double log_prior_group_block(const GroupParams& group, const Hyperparameters& h);
/// Prior terms that depend on G and omega only.
double log_prior_global_block(const HierParams& theta, const Hyperparameters& h);

}  // namespace hiermix
