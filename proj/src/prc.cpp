#include "hiermix/prc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

#include "hiermix/special.hpp"

namespace hiermix {

bool PrcQuery::check() const {
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw std::invalid_argument("PRC query: r0 must be positive");
  return w <= std::min(m, n);
}

double match_probability(const GroupParams& q1, const GroupParams& q2, double r0, bool* clamped) {
  if (!(r0 > 0.0)) throw std::invalid_argument("match_probability: r0 must be positive");
  if (q1.components.empty() || q2.components.empty()) {
    throw std::invalid_argument("match_probability: empty group");
  }
  const std::size_t d = q1.components.front().mean.size();
  if (q2.components.front().mean.size() != d) throw std::invalid_argument("match_probability: dimension mismatch");
  std::vector<double> terms;
  terms.reserve(q1.size() * q2.size());
  for (std::size_t k = 0; k < q1.size(); ++k) {
    for (std::size_t l = 0; l < q2.size(); ++l) {
      double acc = std::log(q1.mixing[k]) + std::log(q2.mixing[l]);
      for (std::size_t b = 0; b < d; ++b) {
        acc += log_normal_pdf(0.0, q1.components[k].mean[b] - q2.components[l].mean[b],
                              q1.components[k].var[b] + q2.components[l].var[b]);
      }
      terms.push_back(acc);
    }
  }
  const double log_p = static_cast<double>(d) * std::log(2.0 * r0) + log_sum_exp(terms);
  const double p = std::exp(log_p);
  const bool over = p > 1.0;
  if (clamped) *clamped = over;
  return over ? 1.0 : p;
}

std::vector<double> draw_from_group(const GroupParams& g, Rng& rng) {
  double u = uniform01(rng);
  std::size_t k = 0;
  for (; k + 1 < g.size(); ++k) {
    u -= g.mixing[k];
    if (u <= 0.0) break;
  }
  const ComponentParams& c = g.components[k];
  std::vector<double> x(c.mean.size());
  for (std::size_t b = 0; b < x.size(); ++b) x[b] = c.mean[b] + std::sqrt(c.var[b]) * standard_normal(rng);
  return x;
}

namespace {

// P(x in cube(y, r0)) for x ~ g.
double cube_probability(const GroupParams& g, const std::vector<double>& y, double r0) {
  double total = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const ComponentParams& c = g.components[k];
    double log_p = std::log(g.mixing[k]);
    for (std::size_t b = 0; b < y.size(); ++b) {
      const double sd = std::sqrt(c.var[b]);
      log_p += log_normal_interval((y[b] - r0 - c.mean[b]) / sd, (y[b] + r0 - c.mean[b]) / sd);
    }
    total += std::exp(log_p);
  }
  return total;
}

}  // namespace

McEstimate match_probability_mc(const GroupParams& q1, const GroupParams& q2, double r0,
                                std::size_t n_samples, Rng& rng, McMethod method) {
  if (n_samples == 0) throw std::invalid_argument("match_probability_mc: need at least one sample");
  if (!(r0 > 0.0)) throw std::invalid_argument("match_probability_mc: r0 must be positive");
  double mean = 0.0, m2 = 0.0;
  for (std::size_t t = 0; t < n_samples; ++t) {
    const std::vector<double> y = draw_from_group(q2, rng);
    double value;
    if (method == McMethod::Conditional) {
      value = cube_probability(q1, y, r0);
    } else {
      const std::vector<double> x = draw_from_group(q1, rng);
      bool hit = true;
      for (std::size_t b = 0; b < x.size(); ++b) hit = hit && std::abs(x[b] - y[b]) <= r0;
      value = hit ? 1.0 : 0.0;
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (value - mean);
  }
  McEstimate out;
  out.estimate = mean;
  out.standard_error = n_samples > 1 ? std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)) : 0.0;
  return out;
}

double expected_matches(const GroupParams& q1, const GroupParams& q2, unsigned m, unsigned n,
                        double r0, bool* clamped) {
  return static_cast<double>(m) * static_cast<double>(n) * match_probability(q1, q2, r0, clamped);
}

double poisson_tail(unsigned w, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("poisson_tail: lambda must be finite and >= 0");
  if (w == 0) return 1.0;
  if (lambda == 0.0) return 0.0;
  const double wd = static_cast<double>(w);
  if (wd > lambda) {
    // Upper sum from s = w; successive ratios lambda / (s + 1) < 1.
    const double log_first = -lambda + wd * std::log(lambda) - log_gamma(wd + 1.0);
    double term = 1.0, sum = 1.0;
    for (double s = wd; term > 1e-18 * sum; s += 1.0) {
      term *= lambda / (s + 1.0);
      sum += term;
    }
    return std::exp(log_first + std::log(sum));
  }
  // Lower sum walked down from s = w - 1, where terms decrease.
  const double top = wd - 1.0;
  const double log_top = -lambda + top * std::log(lambda) - log_gamma(top + 1.0);
  double term = 1.0, sum = 1.0;
  for (double s = top; s > 0.0 && term > 1e-18 * sum; s -= 1.0) {
    term *= s / lambda;
    sum += term;
  }
  return std::max(0.0, 1.0 - std::exp(log_top + std::log(sum)));
}

double mean_prc(const HierParams& theta, const PrcQuery& query, bool* clamped) {
  query.check();
  double total = 0.0;
  bool any = false;
  for (const auto& g1 : theta.groups) {
    for (const auto& g2 : theta.groups) {
      bool c = false;
      const double lambda = expected_matches(g1, g2, query.m, query.n, query.r0, &c);
      any = any || c;
      total += g1.weight * g2.weight * poisson_tail(query.w, lambda);
    }
  }
  if (clamped) *clamped = any;
  return std::clamp(total, 0.0, 1.0);
}

std::pair<double, double> hpd_interval(std::vector<double> samples, double level) {
  if (samples.empty()) throw std::invalid_argument("hpd_interval: no samples");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("hpd_interval: level must lie in (0, 1)");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const auto need = std::min(n, static_cast<std::size_t>(std::ceil(level * static_cast<double>(n) - 1e-9)));
  const std::size_t span = std::max<std::size_t>(need, 1);
  std::size_t best = 0;
  double width = samples[span - 1] - samples[0];
  for (std::size_t i = 1; i + span <= n; ++i) {
    const double wdt = samples[i + span - 1] - samples[i];
    if (wdt < width) {
      width = wdt;
      best = i;
    }
  }
  return {samples[best], samples[best + span - 1]};
}

PrcSummary posterior_prc(const std::vector<HierParams>& samples, const PrcQuery& query,
                         double level, unsigned threads) {
  if (samples.empty()) throw std::invalid_argument("posterior_prc: empty trace");
  query.check();
  PrcSummary out;
  out.query = query;
  out.level = level;
  out.samples = samples.size();
  out.values.assign(samples.size(), 0.0);
  std::vector<char> clamped(samples.size(), 0);
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, samples.size()));
  std::vector<std::exception_ptr> failures(workers);
  auto work = [&](std::size_t begin, std::size_t end, unsigned slot) {
    try {
      for (std::size_t i = begin; i < end; ++i) {
        bool c = false;
        out.values[i] = mean_prc(samples[i], query, &c);
        clamped[i] = c;
      }
    } catch (...) {
      failures[slot] = std::current_exception();
    }
  };
  if (workers <= 1) {
    work(0, samples.size(), 0);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (samples.size() + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(samples.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(work, begin, end, t);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    sum += out.values[i];
    out.clamped += clamped[i] ? 1 : 0;
  }
  out.mean = sum / static_cast<double>(out.values.size());
  std::tie(out.lo, out.hi) = hpd_interval(out.values, level);
  return out;
}

unsigned simulate_match_count(const GroupParams& q1, const GroupParams& q2, unsigned m,
                              unsigned n, double r0, Rng& rng) {
  std::vector<std::vector<double>> xs(m), ys(n);
  for (auto& x : xs) x = draw_from_group(q1, rng);
  for (auto& y : ys) y = draw_from_group(q2, rng);
  unsigned count = 0;
  for (const auto& x : xs) {
    for (const auto& y : ys) {
      bool hit = true;
      for (std::size_t b = 0; b < x.size() && hit; ++b) hit = std::abs(x[b] - y[b]) <= r0;
      count += hit ? 1u : 0u;
    }
  }
  return count;
}

}  // namespace hiermix
