#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "hiermix/split_merge.hpp"
#include "support.hpp"

using namespace hiermix;
using hiermix::testing::random_group;

namespace {

Hyperparameters bounds(int k_max) {
  Hyperparameters h;
  h.mu0 = {0, 0};
  h.tau2 = {100, 100};
  h.k_max = k_max;
  h.g_max = 10;
  return h;
}

// Brute-force oracle over {0,1,2}^K with the singleton restricted to {0,2}.
std::set<std::vector<int>> brute_u(const std::vector<double>& p, int k1, int singleton) {
  std::set<std::vector<int>> out;
  const int k = static_cast<int>(p.size());
  std::vector<int> u(k, 0);
  int total = 1;
  for (int i = 0; i < k; ++i) total *= 3;
  for (int code = 0; code < total; ++code) {
    int c = code;
    for (int i = 0; i < k; ++i) {
      u[i] = c % 3;
      c /= 3;
    }
    bool ok = true;
    int halves = 0, straddle = 0;
    double m0 = 0, m2 = 0;
    for (int i = 0; i < k && ok; ++i) {
      if (i == singleton) {
        if (u[i] == 1) ok = false;
        halves += u[i] / 2;
      } else {
        halves += u[i];
        if (p[i] > 0.5 && u[i] != 1) ok = false;
      }
      if (u[i] == 1) ++straddle;
      if (u[i] == 0) m0 += 2 * p[i];
      if (u[i] == 2) m2 += 2 * p[i];
    }
    if (ok && halves == k1 && straddle > 0 && m0 < 1 && m2 < 1) out.insert(u);
  }
  return out;
}

int singleton_position(const SplitChoice& c) { return c.singleton >= 0 ? 2 * c.singleton : -1; }

}  // namespace

TEST_CASE("admissible u vectors for the worked cases") {
  const auto a = admissible_u({0.5, 0.5}, 2, -1, 1000);
  REQUIRE(a.vectors.size() == 1);
  CHECK(a.vectors[0] == std::vector<int>{1, 1});
  const auto b = admissible_u({0.3, 0.7}, 2, -1, 1000);
  REQUIRE(b.vectors.size() == 1);
  CHECK(b.vectors[0] == std::vector<int>{1, 1});
}

TEST_CASE("property: admissible u enumeration equals the brute-force oracle") {
  Rng rng = make_rng(41);
  for (int rep = 0; rep < 300; ++rep) {
    const int k = 1 + static_cast<int>(rng() % 6);
    const auto p = hiermix::testing::random_simplex(k, rng, 0.01);
    const bool odd = k > 1 && rng() % 2;
    const int singleton = odd ? static_cast<int>(rng() % k) : -1;
    const int k_total = odd ? 2 * k - 1 : 2 * k;
    const int k1 = 1 + static_cast<int>(rng() % (k_total - 1));
    const auto en = admissible_u(p, k1, singleton, 1u << 20);
    CHECK_FALSE(en.capped);
    const std::set<std::vector<int>> got(en.vectors.begin(), en.vectors.end());
    CHECK(got.size() == en.vectors.size());
    CHECK(got == brute_u(p, k1, singleton));
  }
}

TEST_CASE("admissible component-count pairs respect the bounds") {
  Hyperparameters h = bounds(3);
  const auto pairs = admissible_k_pairs(5, h);
  CHECK(pairs == std::vector<std::pair<int, int>>{{2, 3}, {3, 2}});
  CHECK(admissible_k_pairs(7, h).empty());
  h.k_min = 2;
  CHECK(admissible_k_pairs(3, h).empty());
}

TEST_CASE("merge arithmetic on a worked example") {
  GroupParams a, b;
  a.weight = 0.2;
  a.mixing = {0.4, 0.6};
  a.components = {{{0, 1}, {1, 2}}, {{5, 0}, {1, 1}}};
  b.weight = 0.3;
  b.mixing = {0.6, 0.4};
  b.components = {{{1, 3}, {2, 4}}, {{6, 0}, {3, 1}}};
  const GroupParams m = merge_groups(a, b, -1);
  CHECK(m.weight == doctest::Approx(0.5));
  REQUIRE(m.size() == 2);
  CHECK(m.mixing[0] == doctest::Approx(0.5));
  CHECK(m.components[0].mean[0] == doctest::Approx(0.6));
  CHECK(m.components[0].mean[1] == doctest::Approx(0.4 * 1 + 0.6 * 3));
  CHECK(m.components[0].var[0] == doctest::Approx(0.4 * 1 + 0.6 * 2));
  CHECK(m.components[1].mean[0] == doctest::Approx(5.4));

  // Identical groups merge to themselves, K1 = K2 = 1 gives K = 1.
  GroupParams s = hiermix::testing::single(1, 2, 0.5, 0.7);
  s.weight = 0.25;
  const GroupParams ss = merge_groups(s, s, -1);
  REQUIRE(ss.size() == 1);
  CHECK(ss.mixing[0] == doctest::Approx(1.0));
  CHECK(ss.components[0].mean == s.components[0].mean);
  CHECK(ss.components[0].var == s.components[0].var);

  // Odd total: the singleton keeps its parameters and half its probability.
  GroupParams two;
  two.weight = 0.1;
  two.mixing = {0.5, 0.5};
  two.components = {{{-3, 0}, {1, 1}}, {{3, 0}, {1, 1}}};
  const GroupParams odd = merge_groups(two, s, 2);
  REQUIRE(odd.size() == 2);
  CHECK(odd.mixing[1] == doctest::Approx(0.25));
  CHECK(odd.components[1].mean[0] == 3);
  CHECK(odd.mixing[0] == doctest::Approx(0.75));
  CHECK_THROWS(merge_groups(two, s, 1));
}

TEST_CASE("property: merge after split recovers the parent group") {
  Rng rng = make_rng(2024);
  const Hyperparameters h = bounds(12);
  const SplitContext ctx{&h, 0.5, 1u << 20};
  int done = 0, attempts = 0;
  double worst = 0.0;
  while (done < 1000 && attempts < 20000) {
    ++attempts;
    GroupParams g = random_group(1 + rng() % 5, 2, rng);
    g.weight = 0.05 + 0.9 * uniform01(rng);
    const SplitSample s = sample_split(g, 0, ctx, rng);
    if (!s.record) continue;
    ++done;
    const SplitRecord& r = *s.record;
    auto [first, second] = apply_split(g, r.choice, r.aux);
    CHECK(first.size() == static_cast<std::size_t>(r.choice.k1));
    CHECK(second.size() == static_cast<std::size_t>(r.choice.k2));
    const GroupParams back = merge_groups(first, second, singleton_position(r.choice));
    REQUIRE(back.size() == g.size());
    worst = std::max(worst, std::abs(back.weight - g.weight));
    for (std::size_t k = 0; k < g.size(); ++k) {
      worst = std::max(worst, std::abs(back.mixing[k] - g.mixing[k]));
      for (std::size_t b = 0; b < 2; ++b) {
        worst = std::max(worst, std::abs(back.components[k].mean[b] - g.components[k].mean[b]));
        worst = std::max(worst, std::abs(back.components[k].var[b] - g.components[k].var[b]));
      }
    }
    // Children are themselves valid, sorted groups.
    for (const GroupParams* child : {&first, &second}) {
      double sum = 0;
      for (std::size_t k = 0; k < child->size(); ++k) {
        sum += child->mixing[k];
        CHECK(child->mixing[k] > 0);
        if (k > 0) CHECK(child->components[k - 1].mean[0] < child->components[k].mean[0]);
        for (double v : child->components[k].var) CHECK(v > 0);
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    // The recorded auxiliaries are recovered from the children.
    const auto inv = invert_split(g, first, second, singleton_position(r.choice));
    REQUIRE(inv);
    CHECK(inv->first.u == r.choice.u);
    for (std::size_t k = 0; k < g.size(); ++k) {
      CHECK(std::abs(inv->second.v[k] - r.aux.v[k]) < 1e-10);
      CHECK(std::abs(inv->second.y[k][0] - r.aux.y[k][0]) < 1e-10);
    }
    const double pre = split_log_preimage_density(g, first, second, singleton_position(r.choice), ctx);
    CHECK(pre >= r.log_aux_density - r.log_jacobian - 1e-9);
    CHECK(std::isfinite(pre));
  }
  CHECK(done == 1000);
  CHECK(worst < 1e-10);
}

TEST_CASE("weight split alone has Jacobian omega") {
  const double w = 0.37, u0 = 0.61, h = 1e-6;
  auto f = [](double a, double b) { return std::pair{b * a, (1 - b) * a}; };
  const auto [a1, a2] = f(w + h, u0);
  const auto [b1, b2] = f(w - h, u0);
  const auto [c1, c2] = f(w, u0 + h);
  const auto [d1, d2] = f(w, u0 - h);
  const double j11 = (a1 - b1) / (2 * h), j21 = (a2 - b2) / (2 * h);
  const double j12 = (c1 - d1) / (2 * h), j22 = (c2 - d2) / (2 * h);
  CHECK(std::abs(j11 * j22 - j12 * j21) == doctest::Approx(w).epsilon(1e-9));
}

TEST_CASE("split Jacobian matches finite differences") {
  Rng rng = make_rng(99);
  const Hyperparameters h = bounds(12);
  const SplitContext ctx{&h, 0.5, 1u << 20};
  int done = 0;
  while (done < 40) {
    GroupParams g = random_group(1 + rng() % 4, 2, rng);
    g.weight = 0.1 + 0.8 * uniform01(rng);
    const SplitSample s = sample_split(g, 0, ctx, rng);
    if (!s.record) continue;
    ++done;
    const JacobianCheck j = jacobian_check_split(g, s.record->choice, s.record->aux);
    CHECK(j.relative_error < 1e-6);
    CHECK(j.analytic == doctest::Approx(s.record->log_jacobian));
  }
}
