#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hiermix {

using Rng = std::mt19937_64;

/// Independent stream for chain `stream` under a master seed.
Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform on the open interval (0, 1).
double uniform01(Rng& rng);
double standard_normal(Rng& rng);
double gamma_draw(double shape, Rng& rng);
double beta_draw(double a, double b, Rng& rng);
/// Inverse gamma with density proportional to x^-(shape+1) exp(-scale / x).
double inverse_gamma_draw(double shape, double scale, Rng& rng);
unsigned poisson_draw(double mean, Rng& rng);
std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng);

struct CategoricalDraw {
  std::size_t index;
  double log_probability;
};

/// Draws an index with probabilities proportional to exp(log_weights).
CategoricalDraw categorical_from_log(std::span<const double> log_weights, Rng& rng);

/// Log-probabilities normalised in place; returns the log normaliser.
double normalize_log_weights(std::span<double> log_weights);

/// Normal(mean, sd^2) restricted to (lo, hi); either bound may be infinite.
/// Inverse-CDF on the tail that keeps precision; capped rejection only where
/// the tail mass underflows.
double truncated_normal_draw(double mean, double sd, double lo, double hi, Rng& rng,
                             unsigned rejection_cap = 1000);
double truncated_normal_log_density(double x, double mean, double sd, double lo, double hi);

}  // namespace hiermix
