#pragma once

#include <limits>
#include <span>

namespace hiermix {

inline constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gamma(double x);
double log_factorial(unsigned n);

/// log N(x | mean, var) for a univariate normal.
double log_normal_pdf(double x, double mean, double var);

double normal_cdf(double z);
/// log Phi(z), accurate far into the lower tail.
double log_normal_cdf(double z);
/// log(Phi(b) - Phi(a)) for a < b, evaluated on whichever tail avoids cancellation.
double log_normal_interval(double a, double b);
/// Phi^{-1}(p) for p in (0, 1).
double normal_quantile(double p);

/// log(sum(exp(values))); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> values);
double log_add_exp(double a, double b);

}  // namespace hiermix
