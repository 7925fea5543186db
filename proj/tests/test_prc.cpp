#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hiermix/prc.hpp"
#include "support.hpp"

using namespace hiermix;
using namespace hiermix::testing;

namespace {

// Direct partial sums in long double. The upper sum keeps full relative
// precision for small tails; the complement form is used only near one.
long double tail_oracle(unsigned w, long double lambda) {
  long double term = std::exp(-lambda), lower = 0.0L;
  for (unsigned s = 0; s < w; ++s) {
    lower += term;
    term *= lambda / static_cast<long double>(s + 1);
  }
  if (lower > 0.5L) {
    long double upper = 0.0L;
    for (unsigned s = w; s < w + 2000 && term > 1e-40L * upper; ++s) {
      upper += term;
      term *= lambda / static_cast<long double>(s + 1);
    }
    return upper;
  }
  return 1.0L - lower;
}

GroupParams unit_group() { return single(0, 0, 1, 1); }

}  // namespace

TEST_CASE("match probability of two unit normals at r0 = 1 is 1/pi") {
  CHECK(match_probability(unit_group(), unit_group(), 1.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("match probability vanishes for separated groups and rejects r0 <= 0") {
  GroupParams far = single(100, 100, 1e-2, 1e-2);
  CHECK(match_probability(unit_group(), far, 1.0) < 1e-100);
  CHECK_THROWS_AS(match_probability(unit_group(), unit_group(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(match_probability(unit_group(), unit_group(), -1.0), std::invalid_argument);
}

TEST_CASE("match probability clamps at one and reports it") {
  GroupParams tight = single(0, 0, 1e-6, 1e-6);
  bool clamped = false;
  CHECK(match_probability(tight, tight, 1.0, &clamped) == 1.0);
  CHECK(clamped);
  match_probability(unit_group(), unit_group(), 0.01, &clamped);
  CHECK_FALSE(clamped);
}

TEST_CASE("match probability includes mixing probabilities") {
  GroupParams two;
  two.mixing = {0.25, 0.75};
  two.components = {{{-1.0, 0.0}, {0.5, 2.0}}, {{2.0, 1.0}, {1.0, 0.3}}};
  const GroupParams one = single(0.5, -0.5, 0.8, 1.2);
  const double r0 = 0.1;
  auto phi = [](double x, double v) { return std::exp(-0.5 * x * x / v) / std::sqrt(2 * std::numbers::pi * v); };
  double direct = 0.0;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& c = two.components[k];
    double prod = 1.0;
    for (std::size_t b = 0; b < 2; ++b) prod *= phi(c.mean[b] - one.components[0].mean[b], c.var[b] + one.components[0].var[b]);
    direct += two.mixing[k] * prod;
  }
  direct *= 4 * r0 * r0;
  CHECK(match_probability(two, one, r0) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(match_probability(one, two, r0) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("Monte Carlo estimates: co-located point masses, disjoint supports, small r0 limit") {
  Rng rng = make_rng(1);
  GroupParams point = single(1, 1, 1e-12, 1e-12);
  CHECK(match_probability_mc(point, point, 0.01, 2000, rng).estimate == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(match_probability_mc(point, point, 0.01, 2000, rng, McMethod::HitOrMiss).estimate == 1.0);
  GroupParams far = single(50, 50, 1e-4, 1e-4);
  CHECK(match_probability_mc(point, far, 0.01, 2000, rng).estimate < 1e-100);
  CHECK(match_probability_mc(point, far, 0.01, 2000, rng, McMethod::HitOrMiss).estimate == 0.0);
  const double r0 = 0.01;
  const McEstimate est = match_probability_mc(unit_group(), unit_group(), r0, 200000, rng);
  const double limit = 4 * r0 * r0 / (4 * std::numbers::pi);
  CHECK(std::abs(est.estimate - limit) < 3 * est.standard_error + 1e-3 * limit);
  CHECK_THROWS_AS(match_probability_mc(point, point, 0.01, 0, rng), std::invalid_argument);
}

TEST_CASE("closed form agrees with the Monte Carlo oracle on random mixtures") {
  Rng rng = make_rng(2);
  for (int rep = 0; rep < 5; ++rep) {
    const GroupParams q1 = random_group(1 + rep % 3, 2, rng, 2.0);
    const GroupParams q2 = random_group(1 + (rep + 1) % 3, 2, rng, 2.0);
    double min_sd = INFINITY;
    for (const auto* g : {&q1, &q2}) {
      for (const auto& c : g->components) {
        for (double v : c.var) min_sd = std::min(min_sd, std::sqrt(v));
      }
    }
    const double r0 = 0.01 * min_sd;
    const double exact = match_probability(q1, q2, r0);
    const McEstimate est = match_probability_mc(q1, q2, r0, 200000, rng);
    CHECK((rel_diff(exact, est.estimate) < 0.01 || std::abs(exact - est.estimate) < 3 * est.standard_error));
  }
}

TEST_CASE("expected matches scale with m n") {
  CHECK(expected_matches(unit_group(), unit_group(), 0, 10, 1.0) == 0.0);
  CHECK(expected_matches(unit_group(), unit_group(), 1, 1, 1.0) == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(expected_matches(unit_group(), unit_group(), 64, 65, 1.0) ==
        doctest::Approx(64.0 * 65.0 / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("poisson tail worked values") {
  CHECK(poisson_tail(0, 3.0) == 1.0);
  CHECK(poisson_tail(0, 0.0) == 1.0);
  CHECK(poisson_tail(1, 0.0) == 0.0);
  CHECK(poisson_tail(1, 1.0) == doctest::Approx(0.6321206).epsilon(1e-7));
  CHECK(poisson_tail(3, 2.0) == doctest::Approx(0.3233236).epsilon(1e-7));
  CHECK_THROWS_AS(poisson_tail(2, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(poisson_tail(2, NAN), std::invalid_argument);
}

TEST_CASE("poisson tail matches the partial-sum oracle") {
  for (double lambda : {0.01, 0.5, 1.0, 3.7, 10.0, 25.0}) {
    for (unsigned w : {1u, 2u, 5u, 10u, 20u, 40u}) {
      const long double oracle = tail_oracle(w, lambda);
      if (oracle < 1e-300L) continue;
      CHECK(rel_diff(poisson_tail(w, lambda), static_cast<double>(oracle)) < 1e-12);
    }
  }
}

TEST_CASE("poisson tail is monotone in w and lambda") {
  const std::vector<double> lambdas = {0.0, 0.1, 0.5, 1, 2, 5, 10, 20, 50};
  for (double lambda : lambdas) {
    double prev = 1.0;
    for (unsigned w = 0; w <= 200; ++w) {
      const double t = poisson_tail(w, lambda);
      CHECK(t >= 0.0);
      CHECK(t <= prev);
      prev = t;
    }
  }
  for (unsigned w : {0u, 1u, 3u, 10u, 60u}) {
    double prev = 0.0;
    for (double lambda = 0.0; lambda <= 60.0; lambda += 0.25) {
      const double t = poisson_tail(w, lambda);
      CHECK(t >= prev);
      prev = t;
    }
  }
}

TEST_CASE("mean PRC: single group, explicit four-term expansion, convex combination") {
  const PrcQuery q{3, 20, 25, 0.3};
  HierParams one;
  one.groups = {unit_group()};
  const double lam = expected_matches(one.groups[0], one.groups[0], q.m, q.n, q.r0);
  CHECK(mean_prc(one, q) == doctest::Approx(poisson_tail(q.w, lam)).epsilon(1e-14));

  Rng rng = make_rng(3);
  const HierParams two = random_theta({1, 2}, 2, rng);
  double direct = 0.0;
  double tails_min = 1.0, tails_max = 0.0;
  double weight_sum = 0.0;
  for (const auto& a : two.groups) {
    for (const auto& b : two.groups) {
      const double t = poisson_tail(q.w, expected_matches(a, b, q.m, q.n, q.r0));
      direct += a.weight * b.weight * t;
      weight_sum += a.weight * b.weight;
      tails_min = std::min(tails_min, t);
      tails_max = std::max(tails_max, t);
    }
  }
  const double got = mean_prc(two, q);
  CHECK(got == doctest::Approx(direct).epsilon(1e-13));
  CHECK(weight_sum == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(got >= tails_min - 1e-15);
  CHECK(got <= tails_max + 1e-15);
  // w = 0 makes every tail 1.
  CHECK(mean_prc(two, {0, q.m, q.n, q.r0}) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("mean PRC stays in [0, 1] on random states") {
  Rng rng = make_rng(4);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::size_t> counts(1 + rep % 4);
    for (auto& k : counts) k = 1 + static_cast<std::size_t>(uniform01(rng) * 4);
    const HierParams theta = random_theta(counts, 2, rng);
    const PrcQuery q{static_cast<unsigned>(uniform01(rng) * 30), 40, 50, 0.05 + uniform01(rng)};
    const double v = mean_prc(theta, q);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("query validation") {
  CHECK(PrcQuery{3, 5, 6, 1.0}.check());
  CHECK_FALSE(PrcQuery{7, 5, 6, 1.0}.check());
  CHECK_THROWS_AS(PrcQuery({1, 5, 6, 0.0}).check(), std::invalid_argument);
}

TEST_CASE("HPD interval: singleton, normal quantiles, uniform length") {
  auto [lo, hi] = hpd_interval({5.0}, 0.95);
  CHECK(lo == 5.0);
  CHECK(hi == 5.0);
  Rng rng = make_rng(5);
  std::vector<double> z(10000);
  for (double& x : z) x = standard_normal(rng);
  std::tie(lo, hi) = hpd_interval(z, 0.95);
  CHECK(std::abs(lo + 1.96) < 0.05);
  CHECK(std::abs(hi - 1.96) < 0.05);
  std::vector<double> u(10000);
  for (double& x : u) x = uniform01(rng);
  std::tie(lo, hi) = hpd_interval(u, 0.5);
  CHECK(std::abs((hi - lo) - 0.5) < 0.02);
  CHECK_THROWS_AS(hpd_interval({}, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(hpd_interval({1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("HPD interval is the shortest window holding ceil(level n) points") {
  Rng rng = make_rng(6);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform01(rng) * 60);
    std::vector<double> xs(n);
    for (double& x : xs) x = std::exp(2 * standard_normal(rng));
    const double level = 0.05 + 0.9 * uniform01(rng);
    const auto [lo, hi] = hpd_interval(xs, level);
    std::sort(xs.begin(), xs.end());
    const auto need = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-12));
    double best = INFINITY;
    for (std::size_t i = 0; i + need <= n; ++i) best = std::min(best, xs[i + need - 1] - xs[i]);
    CHECK(hi - lo == doctest::Approx(best).epsilon(1e-12));
    const auto inside = std::count_if(xs.begin(), xs.end(), [&](double x) { return x >= lo && x <= hi; });
    CHECK(static_cast<std::size_t>(inside) >= need);
  }
}

TEST_CASE("posterior PRC: degenerate trace, empty trace, thread-count independence") {
  Rng rng = make_rng(7);
  const HierParams theta = random_theta({2, 1}, 2, rng);
  const PrcQuery q{2, 30, 30, 0.2};
  const PrcSummary same = posterior_prc(std::vector<HierParams>(50, theta), q, 0.95, 2);
  CHECK(same.samples == 50);
  CHECK(same.lo == same.hi);
  CHECK(same.mean == doctest::Approx(mean_prc(theta, q)).epsilon(1e-14));
  CHECK_THROWS_AS(posterior_prc({}, q, 0.95), std::invalid_argument);

  std::vector<HierParams> draws;
  for (int i = 0; i < 64; ++i) draws.push_back(random_theta({1 + static_cast<std::size_t>(i % 3), 2}, 2, rng));
  const PrcSummary a = posterior_prc(draws, q, 0.9, 1);
  const PrcSummary b = posterior_prc(draws, q, 0.9, 4);
  CHECK(a.mean == b.mean);
  CHECK(a.values == b.values);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  CHECK(a.lo <= a.hi);
  // A second query on the same draws needs no resampling.
  const PrcSummary c = posterior_prc(draws, {5, 30, 30, 0.2}, 0.9, 2);
  CHECK(c.mean <= a.mean);
}

TEST_CASE("simulated match counts average to lambda") {
  Rng rng = make_rng(8);
  const GroupParams q1 = random_group(2, 2, rng, 1.0);
  const GroupParams q2 = random_group(3, 2, rng, 1.0);
  const double r0 = 0.15;
  const double lam = expected_matches(q1, q2, 30, 30, r0);
  const int reps = 3000;
  double acc = 0.0;
  for (int r = 0; r < reps; ++r) acc += simulate_match_count(q1, q2, 30, 30, r0, rng);
  CHECK(std::abs(acc / reps / lam - 1.0) < 0.08);
}
