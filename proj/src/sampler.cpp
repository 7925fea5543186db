#include "hiermix/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hiermix/error.hpp"
#include "hiermix/k_moves.hpp"
#include "hiermix/kmeans.hpp"
#include "hiermix/special.hpp"

namespace hiermix {

void SamplerConfig::check() const {
  if (thin == 0) throw std::invalid_argument("sampler config: thinning interval must be >= 1");
  if (burn_in > iterations) throw std::invalid_argument("sampler config: burn-in exceeds iterations");
  for (double r : {g_split, g_merge, k_split, k_merge}) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("sampler config: move probabilities must lie in [0, 1]");
  }
  if (g_split + g_merge > 1.0 + 1e-12 || k_split + k_merge > 1.0 + 1e-12) {
    throw std::invalid_argument("sampler config: split + merge probability exceeds 1");
  }
  if (!(proposal_scale > 0.0)) throw std::invalid_argument("sampler config: proposal scale must be positive");
  if (enumeration_cap == 0) throw std::invalid_argument("sampler config: enumeration cap must be positive");
  if (initial_groups < 1 || initial_components < 1) {
    throw std::invalid_argument("sampler config: initial sizes must be >= 1");
  }
}

double MoveStats::rate(Move m) const {
  const auto i = static_cast<std::size_t>(m);
  return proposed[i] ? static_cast<double>(accepted[i]) / static_cast<double>(proposed[i]) : 0.0;
}

namespace {

double complete_term(const Dataset& data, const HierParams& theta, const Labels& labels) {
  return log_prior_labels(labels, theta) + augmented_log_likelihood(data, theta, labels);
}

double object_group_score(const Dataset& data, std::size_t i, const GroupEvaluator& e, double weight) {
  double acc = std::log(weight);
  for (std::size_t j = 0; j < data.num_points(i); ++j) acc += e.density(data.point(i, j));
  return acc;
}

// Bayes allocation of every point of object i within one group; returns the log
// probability of the draw.
double allocate_components(const Dataset& data, std::size_t i, const GroupEvaluator& e, Rng& rng,
                           std::vector<int>& z) {
  const std::size_t n = data.num_points(i);
  z.assign(n, 0);
  if (e.size() == 1) return 0.0;
  std::vector<double> w(e.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    e.weighted_components(data.point(i, j), w);
    const CategoricalDraw draw = categorical_from_log(w, rng);
    z[j] = static_cast<int>(draw.index);
    acc += draw.log_probability;
  }
  return acc;
}

double allocation_log_prob(const Dataset& data, std::size_t i, const GroupEvaluator& e,
                           const std::vector<int>& z) {
  if (e.size() == 1) return 0.0;
  std::vector<double> w(e.size());
  double acc = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    e.weighted_components(data.point(i, j), w);
    acc += w[static_cast<std::size_t>(z[j])] - log_sum_exp(w);
  }
  return acc;
}

// Two-way allocation restricted to components {j, j+1}.
double pair_log_prob(std::span<const double> w, std::size_t j, int pick) {
  return w[static_cast<std::size_t>(pick)] - log_add_exp(w[j], w[j + 1]);
}

double log_choose2(std::size_t n) {
  return std::log(static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

void check_caches(const ChainState& s, const Dataset& data, const Hyperparameters& h, const char* where) {
  const double lp = log_prior(s.theta, h);
  const double lc = complete_term(data, s.theta, s.labels);
  auto drift = [](double a, double b) { return std::abs(a - b) > 1e-8 * std::max(1.0, std::abs(b)); };
  if (drift(s.log_prior, lp) || drift(s.log_complete, lc)) {
    std::ostringstream msg;
    msg << "cached densities drifted after " << where << ": prior " << s.log_prior << " vs " << lp
        << ", complete " << s.log_complete << " vs " << lc;
    throw NumericalError(msg.str());
  }
  const ValidationReport rep = validate(s.theta);
  if (!rep.ok()) throw NumericalError(std::string("invalid state after ") + where + ": " + rep.summary());
}

SplitContext split_context(const Hyperparameters& h, const SamplerConfig& cfg) {
  SplitContext ctx;
  ctx.hyper = &h;
  ctx.proposal_scale = cfg.proposal_scale;
  ctx.enumeration_cap = cfg.enumeration_cap;
  return ctx;
}

// Evaluates the proposed state and applies the MH decision.
bool finish_move(ChainState& s, HierParams&& theta, Labels&& labels, double log_q_ratio,
                 const Dataset& data, const Hyperparameters& h, Rng& rng, Move move,
                 MoveStats& stats) {
  const auto mi = static_cast<std::size_t>(move);
  if (!validate(theta).ok()) {
    ++stats.blocked[mi];
    return false;
  }
  const double lp = log_prior(theta, h);
  if (std::isinf(lp) && lp < 0) return false;
  const double lc = complete_term(data, theta, labels);
  if (std::isinf(lc) && lc < 0) return false;
  const double log_alpha = lp + lc - s.log_posterior() + log_q_ratio;
  if (!accept(log_alpha, rng, kMoveNames[mi])) return false;
  s.theta = std::move(theta);
  s.labels = std::move(labels);
  s.log_prior = lp;
  s.log_complete = lc;
  ++stats.accepted[mi];
  return true;
}

}  // namespace

void refresh(ChainState& s, const Dataset& data, const Hyperparameters& h) {
  s.log_prior = log_prior(s.theta, h);
  s.log_complete = complete_term(data, s.theta, s.labels);
}

bool accept(double log_alpha, Rng& rng, const std::string& context) {
  if (std::isnan(log_alpha)) throw NumericalError("NaN acceptance ratio in " + context);
  if (log_alpha >= 0.0) return true;
  return std::log(uniform01(rng)) < log_alpha;
}

bool g_split_step(ChainState& s, const Dataset& data, const Hyperparameters& h,
                  const SamplerConfig& cfg, Rng& rng, MoveStats& stats) {
  const auto mi = static_cast<std::size_t>(Move::GSplit);
  ++stats.proposed[mi];
  const std::size_t g_count = s.theta.num_groups();
  if (static_cast<int>(g_count) + 1 > h.g_max) {
    ++stats.blocked[mi];
    return false;
  }
  const SplitContext ctx = split_context(h, cfg);
  const std::size_t g = uniform_index(g_count, rng);
  const GroupParams& parent = s.theta.groups[g];
  SplitSample sample = sample_split(parent, g, ctx, rng);
  if (!sample.record) {
    ++stats.blocked[mi];
    return false;
  }
  const SplitRecord& rec = *sample.record;
  auto [first, second] = apply_split(parent, rec.choice, rec.aux);

  Labels labels = s.labels;
  double alloc_fwd = 0.0, alloc_rev = 0.0;
  {
    const GroupEvaluator e0(parent), e1(first), e2(second);
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      if (labels.group[i] != static_cast<int>(g)) continue;
      alloc_rev += allocation_log_prob(data, i, e0, labels.component[i]);
      const double scores[2] = {object_group_score(data, i, e1, first.weight),
                                object_group_score(data, i, e2, second.weight)};
      const CategoricalDraw side = categorical_from_log(scores, rng);
      alloc_fwd += side.log_probability;
      labels.group[i] = side.index == 0 ? static_cast<int>(g) : static_cast<int>(g_count);
      alloc_fwd += allocate_components(data, i, side.index == 0 ? e1 : e2, rng, labels.component[i]);
    }
  }
  const int singleton_pos = rec.choice.singleton >= 0 ? 2 * rec.choice.singleton : -1;
  const double log_split = -std::log(static_cast<double>(g_count)) +
                           split_log_preimage_density(parent, first, second, singleton_pos, ctx);
  if (std::isinf(log_split)) {
    ++stats.blocked[mi];
    return false;
  }
  double log_rev = std::log(cfg.g_merge) - log_choose2(g_count + 1) + alloc_rev;
  if (rec.choice.singleton >= 0) log_rev -= std::log(static_cast<double>(parent.size()));
  const double log_fwd = std::log(cfg.g_split) + log_split + alloc_fwd;

  HierParams theta = s.theta;
  theta.groups[g] = std::move(first);
  theta.groups.push_back(std::move(second));
  canonicalize(theta, &labels);
  return finish_move(s, std::move(theta), std::move(labels), log_rev - log_fwd, data, h, rng,
                     Move::GSplit, stats);
}

bool g_merge_step(ChainState& s, const Dataset& data, const Hyperparameters& h,
                  const SamplerConfig& cfg, Rng& rng, MoveStats& stats) {
  const auto mi = static_cast<std::size_t>(Move::GMerge);
  ++stats.proposed[mi];
  const std::size_t g_count = s.theta.num_groups();
  if (g_count < 2 || static_cast<int>(g_count) - 1 < h.g_min) {
    ++stats.blocked[mi];
    return false;
  }
  const SplitContext ctx = split_context(h, cfg);
  // Uniform unordered pair a < b.
  std::size_t a = uniform_index(g_count, rng);
  std::size_t b = uniform_index(g_count - 1, rng);
  if (b >= a) ++b;
  if (a > b) std::swap(a, b);
  const GroupParams& ga = s.theta.groups[a];
  const GroupParams& gb = s.theta.groups[b];
  const std::size_t k_total = ga.size() + gb.size();
  const std::size_t k_merged = (k_total + 1) / 2;
  const bool odd = k_total % 2 == 1;
  const int singleton_pos = odd ? 2 * static_cast<int>(uniform_index(k_merged, rng)) : -1;
  GroupParams merged = merge_groups(ga, gb, singleton_pos);

  const double log_split = -std::log(static_cast<double>(g_count - 1)) +
                           split_log_preimage_density(merged, ga, gb, singleton_pos, ctx);
  if (std::isinf(log_split)) {
    ++stats.blocked[mi];
    return false;
  }

  // New group order before re-sorting: survivors, then the merged group last.
  std::vector<int> remap(g_count, -1);
  HierParams theta;
  for (std::size_t g = 0; g < g_count; ++g) {
    if (g == a || g == b) continue;
    remap[g] = static_cast<int>(theta.groups.size());
    theta.groups.push_back(s.theta.groups[g]);
  }
  const int merged_index = static_cast<int>(theta.groups.size());
  Labels labels = s.labels;
  double alloc_fwd = 0.0, alloc_rev = 0.0;
  {
    const GroupEvaluator ea(ga), eb(gb), em(merged);
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      const auto w = static_cast<std::size_t>(labels.group[i]);
      if (w != a && w != b) {
        labels.group[i] = remap[w];
        continue;
      }
      const double scores[2] = {object_group_score(data, i, ea, ga.weight),
                                object_group_score(data, i, eb, gb.weight)};
      alloc_rev += scores[w == a ? 0 : 1] - log_add_exp(scores[0], scores[1]);
      alloc_rev += allocation_log_prob(data, i, w == a ? ea : eb, labels.component[i]);
      labels.group[i] = merged_index;
      alloc_fwd += allocate_components(data, i, em, rng, labels.component[i]);
    }
  }
  theta.groups.push_back(std::move(merged));
  double log_fwd = std::log(cfg.g_merge) - log_choose2(g_count) + alloc_fwd;
  if (odd) log_fwd -= std::log(static_cast<double>(k_merged));
  const double log_rev = std::log(cfg.g_split) + log_split + alloc_rev;
  canonicalize(theta, &labels);
  return finish_move(s, std::move(theta), std::move(labels), log_rev - log_fwd, data, h, rng,
                     Move::GMerge, stats);
}

bool k_split_step(ChainState& s, std::size_t group, const Dataset& data,
                  const Hyperparameters& h, const SamplerConfig& cfg, Rng& rng, MoveStats& stats) {
  const auto mi = static_cast<std::size_t>(Move::KSplit);
  ++stats.proposed[mi];
  const GroupParams& g = s.theta.groups[group];
  const std::size_t k = g.size();
  if (static_cast<int>(k) + 1 > h.k_max) {
    ++stats.blocked[mi];
    return false;
  }
  const std::size_t j = uniform_index(k, rng);
  const KSplitAux aux = sample_k_split_aux(g, j, rng);
  std::optional<GroupParams> split = k_split(g, aux);
  if (!split) {
    ++stats.blocked[mi];
    return false;
  }
  Labels labels = s.labels;
  double alloc = 0.0;
  {
    const GroupEvaluator e(*split);
    std::vector<double> w(e.size());
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      if (labels.group[i] != static_cast<int>(group)) continue;
      for (std::size_t pt = 0; pt < labels.component[i].size(); ++pt) {
        int& z = labels.component[i][pt];
        if (z > static_cast<int>(j)) {
          ++z;
        } else if (z == static_cast<int>(j)) {
          e.weighted_components(data.point(i, pt), w);
          const double pair[2] = {w[j], w[j + 1]};
          const CategoricalDraw draw = categorical_from_log(pair, rng);
          z = static_cast<int>(j + draw.index);
          alloc += draw.log_probability;
        }
      }
    }
  }
  const double log_jac = k_split_log_jacobian(g, aux);
  const double log_fwd = std::log(cfg.k_split) - std::log(static_cast<double>(k)) +
                         k_split_aux_log_density(aux) + alloc;
  const double log_rev = std::log(cfg.k_merge) - std::log(static_cast<double>(k));
  HierParams theta = s.theta;
  theta.groups[group] = std::move(*split);
  return finish_move(s, std::move(theta), std::move(labels), log_rev - log_fwd + log_jac, data, h,
                     rng, Move::KSplit, stats);
}

bool k_merge_step(ChainState& s, std::size_t group, const Dataset& data,
                  const Hyperparameters& h, const SamplerConfig& cfg, Rng& rng, MoveStats& stats) {
  const auto mi = static_cast<std::size_t>(Move::KMerge);
  ++stats.proposed[mi];
  const GroupParams& g = s.theta.groups[group];
  const std::size_t k = g.size();
  if (k < 2 || static_cast<int>(k) - 1 < h.k_min) {
    ++stats.blocked[mi];
    return false;
  }
  const std::size_t j = uniform_index(k - 1, rng);
  const std::optional<KSplitAux> aux = k_merge_aux(g, j);
  if (!aux) {
    ++stats.blocked[mi];
    return false;
  }
  GroupParams merged = k_merge(g, j);
  Labels labels = s.labels;
  double alloc_rev = 0.0;
  {
    const GroupEvaluator e(g);
    std::vector<double> w(e.size());
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      if (labels.group[i] != static_cast<int>(group)) continue;
      for (std::size_t pt = 0; pt < labels.component[i].size(); ++pt) {
        int& z = labels.component[i][pt];
        if (z == static_cast<int>(j) || z == static_cast<int>(j + 1)) {
          e.weighted_components(data.point(i, pt), w);
          alloc_rev += pair_log_prob(w, j, z);
          z = static_cast<int>(j);
        } else if (z > static_cast<int>(j + 1)) {
          --z;
        }
      }
    }
  }
  const double log_jac = k_split_log_jacobian(merged, *aux);
  const double log_fwd = std::log(cfg.k_merge) - std::log(static_cast<double>(k - 1));
  const double log_rev = std::log(cfg.k_split) - std::log(static_cast<double>(k - 1)) +
                         k_split_aux_log_density(*aux) + alloc_rev;
  HierParams theta = s.theta;
  theta.groups[group] = std::move(merged);
  return finish_move(s, std::move(theta), std::move(labels), log_rev - log_fwd - log_jac, data, h,
                     rng, Move::KMerge, stats);
}

void gibbs_update_weights(ChainState& s, const Hyperparameters& h, Rng& rng) {
  const std::size_t g_count = s.theta.num_groups();
  if (g_count == 1) {
    s.theta.groups[0].weight = 1.0;
    return;
  }
  std::vector<double> alpha(g_count, h.delta_weight);
  for (int w : s.labels.group) alpha[static_cast<std::size_t>(w)] += 1.0;
  const std::vector<double> omega = dirichlet_draw(alpha, rng);
  for (std::size_t g = 0; g < g_count; ++g) s.theta.groups[g].weight = omega[g];
  canonicalize(s.theta, &s.labels);
}

void gibbs_update_labels(ChainState& s, const Dataset& data, Rng& rng) {
  const std::size_t g_count = s.theta.num_groups();
  std::vector<GroupEvaluator> evals;
  evals.reserve(g_count);
  for (const auto& g : s.theta.groups) evals.emplace_back(g);
  std::vector<double> scores(g_count);
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    for (std::size_t g = 0; g < g_count; ++g) {
      scores[g] = object_group_score(data, i, evals[g], s.theta.groups[g].weight);
    }
    const std::size_t w = categorical_from_log(scores, rng).index;
    s.labels.group[i] = static_cast<int>(w);
    allocate_components(data, i, evals[w], rng, s.labels.component[i]);
  }
}

void gibbs_update_components(ChainState& s, const Dataset& data, const Hyperparameters& h, Rng& rng) {
  const std::size_t d = h.dimension();
  for (std::size_t g = 0; g < s.theta.num_groups(); ++g) {
    GroupParams& group = s.theta.groups[g];
    const std::size_t k = group.size();
    std::vector<double> n(k, 0.0), sum(k * d, 0.0), ss(k * d, 0.0);
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      if (s.labels.group[i] != static_cast<int>(g)) continue;
      for (std::size_t pt = 0; pt < data.num_points(i); ++pt) {
        const auto z = static_cast<std::size_t>(s.labels.component[i][pt]);
        const Point x = data.point(i, pt);
        n[z] += 1.0;
        for (std::size_t b = 0; b < d; ++b) sum[z * d + b] += x[b];
      }
    }
    if (k > 1) {
      std::vector<double> alpha(k);
      for (std::size_t c = 0; c < k; ++c) alpha[c] = h.delta_mixing + n[c];
      group.mixing = dirichlet_draw(alpha, rng);
    } else {
      group.mixing = {1.0};
    }
    for (std::size_t c = 0; c < k; ++c) {
      ComponentParams& comp = group.components[c];
      for (std::size_t b = 0; b < d; ++b) {
        const double prec = 1.0 / h.tau2[b] + n[c] / comp.var[b];
        const double mean = (h.mu0[b] / h.tau2[b] + sum[c * d + b] / comp.var[b]) / prec;
        const double sd = 1.0 / std::sqrt(prec);
        if (b == 0) {
          const double lo = c > 0 ? group.components[c - 1].mean[0] : -INFINITY;
          const double hi = c + 1 < k ? group.components[c + 1].mean[0] : INFINITY;
          comp.mean[0] = truncated_normal_draw(mean, sd, lo, hi, rng);
        } else {
          comp.mean[b] = mean + sd * standard_normal(rng);
        }
      }
    }
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      if (s.labels.group[i] != static_cast<int>(g)) continue;
      for (std::size_t pt = 0; pt < data.num_points(i); ++pt) {
        const auto z = static_cast<std::size_t>(s.labels.component[i][pt]);
        const Point x = data.point(i, pt);
        for (std::size_t b = 0; b < d; ++b) {
          const double r = x[b] - group.components[z].mean[b];
          ss[z * d + b] += r * r;
        }
      }
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t b = 0; b < d; ++b) {
        group.components[c].var[b] =
            inverse_gamma_draw(h.alpha0 + 0.5 * n[c], h.beta0 + 0.5 * ss[c * d + b], rng);
      }
    }
  }
}

ChainState initialize_state(const Dataset& data, const Hyperparameters& h,
                            const SamplerConfig& cfg, Rng& rng) {
  const std::size_t d = h.dimension();
  const int g0 = std::clamp(cfg.initial_groups, h.g_min, h.g_max);
  const int k0 = std::clamp(cfg.initial_components, h.k_min, h.k_max);
  const std::size_t n_obj = data.num_objects();
  const double var_mode = h.beta0 / (h.alpha0 + 1.0);

  ChainState s;
  s.labels.group.assign(n_obj, 0);
  s.labels.component.resize(n_obj);
  for (std::size_t i = 0; i < n_obj; ++i) s.labels.component[i].assign(data.num_points(i), 0);

  auto prior_component = [&]() {
    ComponentParams c;
    c.mean.resize(d);
    c.var.resize(d);
    for (std::size_t b = 0; b < d; ++b) {
      c.mean[b] = h.mu0[b] + std::sqrt(h.tau2[b]) * standard_normal(rng);
      c.var[b] = inverse_gamma_draw(h.alpha0, h.beta0, rng);
    }
    return c;
  };

  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(g0));
  if (data.total_points() > 0 && n_obj >= static_cast<std::size_t>(g0)) {
    std::vector<double> summaries(n_obj * d);
    for (std::size_t i = 0; i < n_obj; ++i) {
      const std::size_t n = data.num_points(i);
      for (std::size_t b = 0; b < d; ++b) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += data.point(i, j)[b];
        summaries[i * d + b] = n ? acc / static_cast<double>(n) : h.mu0[b];
      }
    }
    const KMeansResult km = kmeans(summaries, d, static_cast<std::size_t>(g0), rng);
    for (std::size_t i = 0; i < n_obj; ++i) members[static_cast<std::size_t>(km.assignment[i])].push_back(i);
  } else {
    for (std::size_t i = 0; i < n_obj; ++i) members[i % static_cast<std::size_t>(g0)].push_back(i);
  }

  for (int g = 0; g < g0; ++g) {
    GroupParams group;
    std::vector<double> pooled;
    for (std::size_t i : members[static_cast<std::size_t>(g)]) {
      pooled.insert(pooled.end(), data.objects[i].coords.begin(), data.objects[i].coords.end());
    }
    const std::size_t n_pts = d ? pooled.size() / d : 0;
    std::vector<double> counts(static_cast<std::size_t>(k0), 0.0);
    if (n_pts >= static_cast<std::size_t>(k0)) {
      const KMeansResult km = kmeans(pooled, d, static_cast<std::size_t>(k0), rng);
      for (int c = 0; c < k0; ++c) {
        ComponentParams comp;
        comp.mean.assign(km.centers.begin() + c * static_cast<long>(d), km.centers.begin() + (c + 1) * static_cast<long>(d));
        comp.var.assign(d, 0.0);
        std::size_t cnt = 0;
        for (std::size_t p = 0; p < n_pts; ++p) {
          if (km.assignment[p] != c) continue;
          ++cnt;
          for (std::size_t b = 0; b < d; ++b) {
            const double r = pooled[p * d + b] - comp.mean[b];
            comp.var[b] += r * r;
          }
        }
        counts[static_cast<std::size_t>(c)] = static_cast<double>(cnt);
        for (std::size_t b = 0; b < d; ++b) {
          comp.var[b] = cnt > 1 ? std::max(comp.var[b] / static_cast<double>(cnt), 1e-6 * var_mode) : var_mode;
        }
        group.components.push_back(std::move(comp));
      }
    } else {
      for (int c = 0; c < k0; ++c) group.components.push_back(prior_component());
    }
    std::vector<double> alpha(static_cast<std::size_t>(k0));
    for (std::size_t c = 0; c < alpha.size(); ++c) alpha[c] = h.delta_mixing + counts[c];
    group.mixing = k0 > 1 ? dirichlet_draw(alpha, rng) : std::vector<double>{1.0};
    group.weight = static_cast<double>(members[static_cast<std::size_t>(g)].size());
    s.theta.groups.push_back(std::move(group));
  }
  std::vector<double> alpha(static_cast<std::size_t>(g0));
  for (std::size_t g = 0; g < alpha.size(); ++g) alpha[g] = h.delta_weight + s.theta.groups[g].weight;
  const std::vector<double> omega = g0 > 1 ? dirichlet_draw(alpha, rng) : std::vector<double>{1.0};
  for (std::size_t g = 0; g < omega.size(); ++g) s.theta.groups[g].weight = omega[g];
  canonicalize(s.theta);
  for (auto& group : s.theta.groups) {
    for (std::size_t c = 1; c < group.size(); ++c) {
      double& m = group.components[c].mean[0];
      const double prev = group.components[c - 1].mean[0];
      if (!(m > prev)) m = prev + 1e-6 * (1.0 + std::abs(prev));
    }
  }
  gibbs_update_labels(s, data, rng);
  gibbs_update_components(s, data, h, rng);
  gibbs_update_weights(s, h, rng);
  refresh(s, data, h);
  const ValidationReport rep = validate(s.theta);
  if (!rep.ok()) throw NumericalError("initial state is invalid: " + rep.summary());
  return s;
}

void sweep(ChainState& s, const Dataset& data, const Hyperparameters& h,
           const SamplerConfig& cfg, Rng& rng, MoveStats& stats) {
  const double u = uniform01(rng);
  if (u < cfg.g_split) {
    g_split_step(s, data, h, cfg, rng, stats);
  } else if (u < cfg.g_split + cfg.g_merge) {
    g_merge_step(s, data, h, cfg, rng, stats);
  }
  if (cfg.verify) check_caches(s, data, h, "group move");
  for (std::size_t g = 0; g < s.theta.num_groups(); ++g) {
    const double r = uniform01(rng);
    if (r < cfg.k_split) {
      k_split_step(s, g, data, h, cfg, rng, stats);
    } else if (r < cfg.k_split + cfg.k_merge) {
      k_merge_step(s, g, data, h, cfg, rng, stats);
    }
  }
  if (cfg.verify) check_caches(s, data, h, "component moves");
  gibbs_update_weights(s, h, rng);
  gibbs_update_labels(s, data, rng);
  gibbs_update_components(s, data, h, rng);
  refresh(s, data, h);
  if (cfg.verify) check_caches(s, data, h, "Gibbs steps");
}

ChainTrace run_chain(const Dataset& data, const Hyperparameters& h, const SamplerConfig& cfg,
                     std::size_t chain_index, const std::optional<ChainState>& init,
                     const ProgressFn& progress) {
  cfg.check();
  h.check();
  if (data.num_objects() > 0 && data.dimension != h.dimension()) {
    throw std::invalid_argument("run_chain: data and hyperparameter dimensions differ");
  }
  ChainTrace trace;
  trace.seed = cfg.seed;
  trace.chain = chain_index;
  trace.config = cfg;
  trace.hyper = h;
  trace.standardization = data.standardization;
  Rng rng = make_rng(cfg.seed, chain_index);
  ChainState state = init ? *init : initialize_state(data, h, cfg, rng);
  refresh(state, data, h);
  const std::size_t monitor = cfg.monitor_interval();
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    try {
      sweep(state, data, h, cfg, rng, trace.stats);
    } catch (const NumericalError& e) {
      throw NumericalError("chain " + std::to_string(chain_index) + ", iteration " + std::to_string(t) + ": " + e.what());
    }
    const bool retain = t > cfg.burn_in && (t - cfg.burn_in) % cfg.thin == 0;
    const bool watch = t % monitor == 0;
    if (!retain && !watch) continue;
    const double ll = log_likelihood(data, state.theta);
    if (watch) {
      trace.monitor.push_back({t, ll, state.theta.component_counts()});
      if (progress) progress({chain_index, t, ll, state.theta.component_counts(), &trace.stats});
    }
    if (retain) trace.samples.push_back({t, state.theta, ll, state.log_prior + ll});
  }
  return trace;
}

}  // namespace hiermix
