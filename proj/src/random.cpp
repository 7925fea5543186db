#include "hiermix/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/erf.hpp>

#include "hiermix/error.hpp"
#include "hiermix/special.hpp"

namespace hiermix {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;

// Standard normal truncated to (a, b) with a >= 0.
double upper_tail_draw(double a, double b, Rng& rng, unsigned cap) {
  const double qa = 0.5 * std::erfc(a / kSqrt2);
  if (qa > 1e-300) {
    const double qb = std::isinf(b) ? 0.0 : 0.5 * std::erfc(b / kSqrt2);
    const double t = qa - uniform01(rng) * (qa - qb);
    const double x = kSqrt2 * boost::math::erfc_inv(2.0 * t);
    return std::clamp(x, a, b);
  }
  // Far tail: exponential proposal shifted to a (Robert, 1995).
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (unsigned i = 0; i < cap; ++i) {
    const double x = a - std::log(uniform01(rng)) / rate;
    if (x >= b) continue;
    const double d = x - rate;
    if (std::log(uniform01(rng)) <= -0.5 * d * d) return x;
  }
  throw NumericalError("truncated normal: rejection cap exhausted in far tail");
}

}  // namespace

Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x68696572u};
  return Rng(seq);
}

double uniform01(Rng& rng) {
  // 53 random bits mapped to the centre of their bin: never exactly 0 or 1.
  const std::uint64_t bits = rng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

double gamma_draw(double shape, Rng& rng) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(rng);
}

double beta_draw(double a, double b, Rng& rng) {
  for (;;) {
    const double x = gamma_draw(a, rng);
    const double y = gamma_draw(b, rng);
    const double s = x + y;
    if (s > 0.0) {
      const double r = x / s;
      if (r > 0.0 && r < 1.0) return r;
    }
  }
}

double inverse_gamma_draw(double shape, double scale, Rng& rng) {
  for (;;) {
    const double g = gamma_draw(shape, rng);
    if (g > 0.0) {
      const double x = scale / g;
      if (std::isfinite(x)) return x;
    }
  }
}

unsigned poisson_draw(double mean, Rng& rng) {
  std::poisson_distribution<unsigned> dist(mean);
  return dist(rng);
}

std::vector<double> dirichlet_draw(std::span<const double> alpha, Rng& rng) {
  std::vector<double> out(alpha.size());
  for (;;) {
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      out[i] = gamma_draw(alpha[i], rng);
      sum += out[i];
    }
    if (!(sum > 0.0)) continue;
    bool positive = true;
    for (double& x : out) {
      x /= sum;
      positive = positive && x > 0.0;
    }
    if (positive) return out;
  }
}

double normalize_log_weights(std::span<double> log_weights) {
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm)) {
    throw NumericalError("categorical weights underflowed to zero");
  }
  for (double& w : log_weights) w -= norm;
  return norm;
}

CategoricalDraw categorical_from_log(std::span<const double> log_weights, Rng& rng) {
  const double norm = log_sum_exp(log_weights);
  if (!std::isfinite(norm)) {
    throw NumericalError("categorical weights underflowed to zero");
  }
  const double u = uniform01(rng);
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (std::isinf(log_weights[i])) continue;
    last = i;
    acc += std::exp(log_weights[i] - norm);
    if (u < acc) return {i, log_weights[i] - norm};
  }
  return {last, log_weights[last] - norm};
}

double truncated_normal_draw(double mean, double sd, double lo, double hi, Rng& rng,
                             unsigned rejection_cap) {
  if (!(lo < hi)) throw std::invalid_argument("truncated normal: empty interval");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  double z;
  if (a >= 0.0) {
    z = upper_tail_draw(a, b, rng, rejection_cap);
  } else if (b <= 0.0) {
    z = -upper_tail_draw(-b, -a, rng, rejection_cap);
  } else {
    const double pa = std::isinf(a) ? 0.0 : normal_cdf(a);
    const double pb = std::isinf(b) ? 1.0 : normal_cdf(b);
    const double t = pa + uniform01(rng) * (pb - pa);
    z = std::clamp(normal_quantile(t), a, b);
  }
  const double x = mean + sd * z;
  // Guard against the affine map rounding onto an endpoint.
  if (x <= lo) return std::nextafter(lo, hi);
  if (x >= hi) return std::nextafter(hi, lo);
  return x;
}

double truncated_normal_log_density(double x, double mean, double sd, double lo, double hi) {
  if (!(x > lo && x < hi)) return kNegInf;
  const double z = (x - mean) / sd;
  return -0.5 * z * z - 0.5 * kLogTwoPi - std::log(sd) -
         log_normal_interval((lo - mean) / sd, (hi - mean) / sd);
}

}  // namespace hiermix
