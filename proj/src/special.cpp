#include "hiermix/special.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace hiermix {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440084436210485;

// log Q(x) = log(1 - Phi(x)) for x >= 0.
double log_upper_tail(double x) {
  if (x < 30.0) return std::log(0.5 * std::erfc(x * kSqrtHalf));
  // Asymptotic expansion of the Mills ratio.
  const double x2 = x * x;
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - std::log(x) - 0.5 * kLogTwoPi + std::log(series);
}

}  // namespace

double log_gamma(double x) { return boost::math::lgamma(x); }

double log_factorial(unsigned n) { return boost::math::lgamma(static_cast<double>(n) + 1.0); }

double log_normal_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var)) - 0.5 * r * r / var;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z * kSqrtHalf); }

double log_normal_cdf(double z) {
  if (z >= 0.0) return std::log1p(-0.5 * std::erfc(z * kSqrtHalf));
  return log_upper_tail(-z);
}

double log_normal_interval(double a, double b) {
  if (!(a < b)) return kNegInf;
  if (a >= 0.0) {
    // Both endpoints in the upper tail: Q(a) - Q(b).
    const double la = log_upper_tail(a);
    if (std::isinf(b)) return la;
    const double lb = log_upper_tail(b);
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) return log_normal_interval(-b, -a);
  // Interval straddles zero; the mass is at least Phi(b) - 1/2.
  const double lower = std::isinf(a) ? 0.0 : normal_cdf(a);
  const double upper = std::isinf(b) ? 0.0 : 0.5 * std::erfc(b * kSqrtHalf);
  return std::log1p(-(lower + upper));
}

double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return kNegInf;
  const double top = *std::max_element(values.begin(), values.end());
  if (std::isinf(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (std::isinf(a)) return a;
  return a + std::log1p(std::exp(b - a));
}

}  // namespace hiermix
