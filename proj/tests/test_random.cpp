#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "hiermix/error.hpp"
#include "hiermix/random.hpp"
#include "hiermix/special.hpp"

using namespace hiermix;

namespace {

struct Moments {
  double mean = 0, var = 0;
};

template <class F>
Moments sample_moments(F&& draw, int n) {
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = draw();
    s += x;
    s2 += x * x;
  }
  Moments m;
  m.mean = s / n;
  m.var = s2 / n - m.mean * m.mean;
  return m;
}

}  // namespace

TEST_CASE("streams are deterministic and distinct") {
  Rng a = make_rng(7, 0), b = make_rng(7, 0), c = make_rng(7, 1);
  const auto x = a(), y = b(), z = c();
  CHECK(x == y);
  CHECK(x != z);
}

TEST_CASE("gamma, beta and inverse gamma draws have the right moments") {
  Rng rng = make_rng(11);
  const int n = 200000;
  const Moments g = sample_moments([&] { return gamma_draw(2.5, rng); }, n);
  CHECK(g.mean == doctest::Approx(2.5).epsilon(0.02));
  CHECK(g.var == doctest::Approx(2.5).epsilon(0.04));
  const Moments small = sample_moments([&] { return gamma_draw(0.3, rng); }, n);
  CHECK(small.mean == doctest::Approx(0.3).epsilon(0.03));
  const Moments be = sample_moments([&] { return beta_draw(2.0, 2.0, rng); }, n);
  CHECK(be.mean == doctest::Approx(0.5).epsilon(0.01));
  CHECK(be.var == doctest::Approx(0.05).epsilon(0.03));
  // IG(shape 4, scale 3): mean 1, variance 0.5.
  const Moments ig = sample_moments([&] { return inverse_gamma_draw(4.0, 3.0, rng); }, n);
  CHECK(ig.mean == doctest::Approx(1.0).epsilon(0.02));
  CHECK(ig.var == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("poisson draws match mean and variance") {
  Rng rng = make_rng(3);
  for (double lambda : {0.7, 12.0, 60.0}) {
    const Moments m = sample_moments([&] { return static_cast<double>(poisson_draw(lambda, rng)); }, 100000);
    CHECK(m.mean == doctest::Approx(lambda).epsilon(0.02));
    CHECK(m.var == doctest::Approx(lambda).epsilon(0.04));
  }
}

TEST_CASE("dirichlet draws lie on the simplex with the right means") {
  Rng rng = make_rng(5);
  const std::vector<double> alpha = {1.0, 2.0, 7.0};
  std::vector<double> mean(3, 0.0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto p = dirichlet_draw(alpha, rng);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k < 3; ++k) mean[k] += p[k] / n;
  }
  CHECK(mean[0] == doctest::Approx(0.1).epsilon(0.03));
  CHECK(mean[2] == doctest::Approx(0.7).epsilon(0.01));
}

TEST_CASE("categorical_from_log frequencies match probabilities within 3 SE") {
  Rng rng = make_rng(9);
  const std::vector<double> lw = {std::log(0.2) + 500, std::log(0.5) + 500, std::log(0.3) + 500};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  double logp_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto d = categorical_from_log(lw, rng);
    ++counts[d.index];
    logp_sum += d.log_probability;
  }
  const double probs[] = {0.2, 0.5, 0.3};
  for (int k = 0; k < 3; ++k) {
    const double se = std::sqrt(probs[k] * (1 - probs[k]) / n);
    CHECK(std::abs(counts[k] / double(n) - probs[k]) < 3 * se);
  }
  const std::vector<double> dead = {kNegInf, kNegInf};
  CHECK_THROWS_AS(categorical_from_log(dead, rng), NumericalError);
}

TEST_CASE("truncated normal stays inside and matches the truncated mean") {
  Rng rng = make_rng(21);
  const double mu = 0.0, sd = 1.0, lo = 1.0, hi = 2.0;
  double s = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double x = truncated_normal_draw(mu, sd, lo, hi, rng);
    REQUIRE(x > lo);
    REQUIRE(x < hi);
    s += x;
  }
  // E[X] = mu + sd (phi(a) - phi(b)) / (Phi(b) - Phi(a)).
  const double phi_a = std::exp(-0.5) / std::sqrt(2 * M_PI), phi_b = std::exp(-2.0) / std::sqrt(2 * M_PI);
  const double mass = normal_cdf(2.0) - normal_cdf(1.0);
  CHECK(s / n == doctest::Approx(mu + sd * (phi_a - phi_b) / mass).epsilon(0.005));
  // Far tail: every draw stays inside a narrow window.
  for (int i = 0; i < 1000; ++i) {
    const double x = truncated_normal_draw(0.0, 1.0, 30.0, 30.5, rng);
    CHECK((x > 30.0 && x < 30.5));
  }
  CHECK_THROWS_AS(truncated_normal_draw(0.0, 1.0, 2.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("truncated normal density integrates to one") {
  const double lo = -0.5, hi = 3.0;
  const int steps = 20000;
  double sum = 0.0;
  for (int i = 0; i < steps; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / steps;
    sum += std::exp(truncated_normal_log_density(x, 0.7, 1.3, lo, hi)) * (hi - lo) / steps;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(truncated_normal_log_density(4.0, 0.7, 1.3, lo, hi) == kNegInf);
}
