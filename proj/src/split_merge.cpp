#include "hiermix/split_merge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

#include "hiermix/special.hpp"

namespace hiermix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Child entry of the combined, coordinate-0 sorted component list.
struct Child {
  double prob;
  const ComponentParams* comp;
  int side;  // 0 = first group, 1 = second group
};

std::vector<Child> combined_sorted(const GroupParams& a, const GroupParams& b) {
  std::vector<Child> all;
  all.reserve(a.size() + b.size());
  for (std::size_t k = 0; k < a.size(); ++k) all.push_back({a.mixing[k], &a.components[k], 0});
  for (std::size_t k = 0; k < b.size(); ++k) all.push_back({b.mixing[k], &b.components[k], 1});
  std::stable_sort(all.begin(), all.end(), [](const Child& x, const Child& y) {
    return x.comp->mean[0] < y.comp->mean[0];
  });
  return all;
}

// Interval for the first-half mean on coordinate 0 of a split component with
// weighted mean m, lower bound L (upper child of the previous component) and
// upper bound U (next parent mean).
std::pair<double, double> y_interval(double m, double v, double lower, double upper, int u) {
  const double ratio = (1.0 - v) / v;
  const double lo_from_upper = std::isfinite(upper) ? m - ratio * (upper - m) : -kInf;
  const double a = std::max(lower, lo_from_upper);
  if (u != 1) return {a, m};
  const double hi_from_lower = std::isfinite(lower) ? m + ratio * (m - lower) : kInf;
  return {a, std::min(upper, hi_from_lower)};
}

double second_half(double parent, double v, double first) { return (parent - v * first) / (1.0 - v); }

// Index of the last component receiving one half on each side; -1 if none.
int last_straddling(const SplitChoice& choice) {
  int last = -1;
  for (int k = 0; k < static_cast<int>(choice.u.size()); ++k) {
    if (k != choice.singleton && choice.u[static_cast<std::size_t>(k)] == 1) last = k;
  }
  return last;
}

double first_side_remainder(const std::vector<double>& mixing, const SplitChoice& choice) {
  double r = 1.0;
  for (std::size_t k = 0; k < mixing.size(); ++k) {
    if (choice.u[k] == 2) r -= 2.0 * mixing[k];
  }
  return r;
}

bool shape_ok(const GroupParams& g, const SplitChoice& choice, const SplitAux& aux) {
  const int k = static_cast<int>(g.size());
  if (static_cast<int>(choice.u.size()) != k) return false;
  const bool odd = choice.k_total == 2 * k - 1;
  if (!odd && choice.k_total != 2 * k) return false;
  if (odd != (choice.singleton >= 0)) return false;
  if (odd && choice.singleton >= k) return false;
  if (choice.k1 + choice.k2 != choice.k_total) return false;
  if (aux.v.size() != g.size() || aux.y.size() != g.size() || aux.z.size() != g.size()) return false;
  return true;
}

}  // namespace

std::vector<std::pair<int, int>> admissible_k_pairs(int k_total, const Hyperparameters& h) {
  std::vector<std::pair<int, int>> pairs;
  for (int k1 = std::max(1, h.k_min); k1 <= h.k_max; ++k1) {
    const int k2 = k_total - k1;
    if (k2 >= std::max(1, h.k_min) && k2 <= h.k_max) pairs.emplace_back(k1, k2);
  }
  return pairs;
}

UEnumeration admissible_u(const std::vector<double>& mixing, int k1, int singleton,
                          std::size_t cap) {
  UEnumeration out;
  const int k = static_cast<int>(mixing.size());
  std::vector<int> u(mixing.size(), 0);
  // Largest contribution still available from positions >= i.
  std::vector<int> tail(mixing.size() + 1, 0);
  for (int i = k - 1; i >= 0; --i) tail[static_cast<std::size_t>(i)] = tail[static_cast<std::size_t>(i) + 1] + (i == singleton ? 1 : 2);

  auto recurse = [&](auto&& self, int i, int contributed, double mass0, double mass2) -> void {
    if (out.capped) return;
    if (i == k) {
      if (contributed == k1) {
        if (out.vectors.size() >= cap) {
          out.capped = true;
          return;
        }
        out.vectors.push_back(u);
      }
      return;
    }
    const auto idx = static_cast<std::size_t>(i);
    const double w = 2.0 * mixing[idx];
    for (int choice : {0, 1, 2}) {
      if (i == singleton && choice == 1) continue;
      const int c = i == singleton ? choice / 2 : choice;
      const int next = contributed + c;
      if (next > k1 || next + tail[idx + 1] < k1) continue;
      const double m0 = choice == 0 ? mass0 + w : mass0;
      const double m2 = choice == 2 ? mass2 + w : mass2;
      if (!(m0 < 1.0) || !(m2 < 1.0)) continue;
      u[idx] = choice;
      self(self, i + 1, next, m0, m2);
    }
  };
  recurse(recurse, 0, 0, 0.0, 0.0);
  return out;
}

bool u_admissible(const std::vector<double>& mixing, const SplitChoice& choice) {
  if (choice.u.size() != mixing.size()) return false;
  int contributed = 0;
  double mass0 = 0.0, mass2 = 0.0;
  for (std::size_t k = 0; k < mixing.size(); ++k) {
    const int u = choice.u[k];
    const bool single = static_cast<int>(k) == choice.singleton;
    if (u < 0 || u > 2 || (single && u == 1)) return false;
    if (mixing[k] > 0.5 && u != 1) return false;
    contributed += single ? u / 2 : u;
    if (u == 0) mass0 += 2.0 * mixing[k];
    if (u == 2) mass2 += 2.0 * mixing[k];
  }
  return contributed == choice.k1 && mass0 < 1.0 && mass2 < 1.0;
}

std::pair<GroupParams, GroupParams> apply_split(const GroupParams& g, const SplitChoice& choice,
                                                const SplitAux& aux) {
  if (!shape_ok(g, choice, aux)) throw std::invalid_argument("apply_split: inconsistent split record");
  const std::size_t d = g.components.front().mean.size();
  GroupParams first, second;
  first.weight = aux.u0 * g.weight;
  second.weight = (1.0 - aux.u0) * g.weight;
  auto push = [&](int side, double prob, ComponentParams c) {
    GroupParams& dst = side == 0 ? first : second;
    dst.mixing.push_back(prob);
    dst.components.push_back(std::move(c));
  };
  for (std::size_t k = 0; k < g.size(); ++k) {
    const ComponentParams& parent = g.components[k];
    const double p = g.mixing[k];
    const int u = choice.u[k];
    if (static_cast<int>(k) == choice.singleton) {
      push(u == 2 ? 0 : 1, 2.0 * p, parent);
      continue;
    }
    const double v = aux.v[k];
    ComponentParams c1, c2;
    c1.mean = aux.y[k];
    c1.var = aux.z[k];
    c2.mean.resize(d);
    c2.var.resize(d);
    for (std::size_t b = 0; b < d; ++b) {
      c2.mean[b] = second_half(parent.mean[b], v, aux.y[k][b]);
      c2.var[b] = second_half(parent.var[b], v, aux.z[k][b]);
    }
    const double p1 = 2.0 * v * p;
    const double p2 = 2.0 * (1.0 - v) * p;
    if (u == 1) {
      // Keep each group's list in coordinate-0 order.
      push(0, p1, std::move(c1));
      push(1, p2, std::move(c2));
    } else {
      const int side = u == 2 ? 0 : 1;
      push(side, p1, std::move(c1));
      push(side, p2, std::move(c2));
    }
  }
  return {std::move(first), std::move(second)};
}

GroupParams merge_groups(const GroupParams& a, const GroupParams& b, int singleton_pos) {
  const std::vector<Child> all = combined_sorted(a, b);
  const std::size_t total = all.size();
  const bool odd = total % 2 == 1;
  if (odd && (singleton_pos < 0 || singleton_pos % 2 != 0 || static_cast<std::size_t>(singleton_pos) >= total)) {
    throw std::invalid_argument("merge_groups: odd total needs an even singleton position");
  }
  const std::size_t d = all.front().comp->mean.size();
  GroupParams merged;
  merged.weight = a.weight + b.weight;
  std::size_t pos = 0;
  while (pos < total) {
    if (odd && pos == static_cast<std::size_t>(singleton_pos)) {
      merged.mixing.push_back(all[pos].prob / 2.0);
      merged.components.push_back(*all[pos].comp);
      ++pos;
      continue;
    }
    const Child& x = all[pos];
    const Child& y = all[pos + 1];
    const double s = x.prob + y.prob;
    ComponentParams c;
    c.mean.resize(d);
    c.var.resize(d);
    for (std::size_t bb = 0; bb < d; ++bb) {
      c.mean[bb] = (x.prob * x.comp->mean[bb] + y.prob * y.comp->mean[bb]) / s;
      c.var[bb] = (x.prob * x.comp->var[bb] + y.prob * y.comp->var[bb]) / s;
    }
    merged.mixing.push_back(s / 2.0);
    merged.components.push_back(std::move(c));
    pos += 2;
  }
  return merged;
}

std::optional<std::pair<SplitChoice, SplitAux>> invert_split(const GroupParams& merged,
                                                              const GroupParams& first,
                                                              const GroupParams& second,
                                                              int singleton_pos) {
  const std::vector<Child> all = combined_sorted(first, second);
  const std::size_t k = merged.size();
  const std::size_t total = all.size();
  if ((total + 1) / 2 != k) return std::nullopt;
  const bool odd = total % 2 == 1;
  if (odd && (singleton_pos < 0 || singleton_pos % 2 != 0 || static_cast<std::size_t>(singleton_pos) >= total)) {
    return std::nullopt;
  }
  SplitChoice choice;
  choice.k_total = static_cast<int>(total);
  choice.k1 = static_cast<int>(first.size());
  choice.k2 = static_cast<int>(second.size());
  choice.u.assign(k, 0);
  SplitAux aux;
  aux.u0 = first.weight / (first.weight + second.weight);
  aux.v.assign(k, 0.5);
  aux.y.assign(k, {});
  aux.z.assign(k, {});
  std::size_t pos = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (odd && pos == static_cast<std::size_t>(singleton_pos)) {
      choice.singleton = static_cast<int>(c);
      choice.u[c] = all[pos].side == 0 ? 2 : 0;
      aux.y[c] = all[pos].comp->mean;
      aux.z[c] = all[pos].comp->var;
      ++pos;
      continue;
    }
    const Child& lo = all[pos];
    const Child& hi = all[pos + 1];
    const Child* one = &lo;
    const Child* two = &hi;
    if (lo.side != hi.side) {
      choice.u[c] = 1;
      if (lo.side == 1) std::swap(one, two);
    } else {
      choice.u[c] = lo.side == 0 ? 2 : 0;
    }
    aux.v[c] = one->prob / (one->prob + two->prob);
    aux.y[c] = one->comp->mean;
    aux.z[c] = one->comp->var;
    pos += 2;
  }
  return std::make_pair(std::move(choice), std::move(aux));
}

double split_aux_log_density(const GroupParams& merged, const SplitChoice& choice,
                             const SplitAux& aux, const SplitContext& ctx) {
  if (ctx.hyper == nullptr) throw std::invalid_argument("split_aux_log_density: missing hyperparameters");
  if (!shape_ok(merged, choice, aux)) return kNegInf;
  const std::size_t k = merged.size();
  const std::size_t d = merged.components.front().mean.size();
  if (!(aux.u0 > 0.0 && aux.u0 < 1.0)) return kNegInf;

  double acc = -std::log(2.0);
  const auto pairs = admissible_k_pairs(choice.k_total, *ctx.hyper);
  if (std::find(pairs.begin(), pairs.end(), std::make_pair(choice.k1, choice.k2)) == pairs.end()) {
    return kNegInf;
  }
  acc -= std::log(static_cast<double>(pairs.size()));
  if (choice.singleton >= 0) acc -= std::log(static_cast<double>(k));
  if (!u_admissible(merged.mixing, choice)) return kNegInf;
  const UEnumeration en = admissible_u(merged.mixing, choice.k1, choice.singleton, ctx.enumeration_cap);
  if (en.capped || en.vectors.empty()) return kNegInf;
  acc -= std::log(static_cast<double>(en.vectors.size()));

  // Sequential-uniform density of v on the straddling components.
  std::vector<std::size_t> a1;
  for (std::size_t c = 0; c < k; ++c) {
    if (static_cast<int>(c) == choice.singleton) continue;
    if (!(aux.v[c] > 0.0 && aux.v[c] < 1.0)) return kNegInf;
    if (choice.u[c] == 1) a1.push_back(c);
  }
  if (a1.empty()) return kNegInf;
  double remaining = first_side_remainder(merged.mixing, choice);
  double rest = 0.0;
  for (std::size_t c : a1) rest += 2.0 * merged.mixing[c];
  for (std::size_t i = 0; i < a1.size(); ++i) {
    const std::size_t c = a1[i];
    const double w = 2.0 * merged.mixing[c];
    rest -= w;
    if (i + 1 == a1.size()) {
      const double implied = remaining / w;
      if (std::abs(implied - aux.v[c]) > 1e-8 * std::max(1.0, implied)) return kNegInf;
      break;
    }
    const double lo = std::max(0.0, (remaining - rest) / w);
    const double hi = std::min(1.0, remaining / w);
    if (!(hi > lo) || aux.v[c] < lo || aux.v[c] > hi) return kNegInf;
    acc -= std::log(hi - lo);
    remaining -= w * aux.v[c];
  }

  // Mean and variance auxiliaries, walking components in coordinate-0 order.
  double lower = -kInf;
  for (std::size_t c = 0; c < k; ++c) {
    const ComponentParams& parent = merged.components[c];
    if (static_cast<int>(c) == choice.singleton) {
      lower = parent.mean[0];
      continue;
    }
    if (aux.y[c].size() != d || aux.z[c].size() != d) return kNegInf;
    const double v = aux.v[c];
    const double upper = c + 1 < k ? merged.components[c + 1].mean[0] : kInf;
    const auto [a, b] = y_interval(parent.mean[0], v, lower, upper, choice.u[c]);
    const double y0 = aux.y[c][0];
    if (!(y0 > a && y0 < b)) return kNegInf;
    acc += truncated_normal_log_density(y0, parent.mean[0], ctx.proposal_scale * std::sqrt(parent.var[0]), a, b);
    for (std::size_t bb = 1; bb < d; ++bb) {
      const double sd = ctx.proposal_scale * std::sqrt(parent.var[bb]);
      acc += log_normal_pdf(aux.y[c][bb], parent.mean[bb], sd * sd);
    }
    for (std::size_t bb = 0; bb < d; ++bb) {
      const double s = parent.var[bb];
      const double zb = aux.z[c][bb];
      if (!(zb > 0.0 && zb < s / v)) return kNegInf;
      acc += truncated_normal_log_density(zb, s, ctx.proposal_scale * s, 0.0, s / v);
    }
    lower = std::max(y0, second_half(parent.mean[0], v, y0));
  }
  return acc;
}

double split_log_jacobian(const GroupParams& merged, const SplitChoice& choice,
                          const SplitAux& aux) {
  const std::size_t d = merged.components.front().mean.size();
  const int last = last_straddling(choice);
  if (last < 0) return kNegInf;
  double acc = std::log(merged.weight);
  if (choice.singleton >= 0) acc += std::log(2.0);
  for (std::size_t c = 0; c < merged.size(); ++c) {
    if (static_cast<int>(c) == choice.singleton) continue;
    acc -= 2.0 * static_cast<double>(d) * std::log1p(-aux.v[c]);
    if (static_cast<int>(c) == last) continue;
    acc += std::log(4.0 * merged.mixing[c]);
  }
  return acc;
}

double split_log_preimage_density(const GroupParams& merged, const GroupParams& a,
                                  const GroupParams& b, int singleton_pos,
                                  const SplitContext& ctx) {
  double terms[2] = {kNegInf, kNegInf};
  for (int role = 0; role < 2; ++role) {
    const GroupParams& first = role == 0 ? a : b;
    const GroupParams& second = role == 0 ? b : a;
    const auto inv = invert_split(merged, first, second, singleton_pos);
    if (!inv) continue;
    const double q = split_aux_log_density(merged, inv->first, inv->second, ctx);
    if (std::isinf(q)) continue;
    terms[role] = q - split_log_jacobian(merged, inv->first, inv->second);
  }
  return log_add_exp(terms[0], terms[1]);
}

SplitSample sample_split(const GroupParams& g, std::size_t index, const SplitContext& ctx,
                         Rng& rng) {
  if (ctx.hyper == nullptr) throw std::invalid_argument("sample_split: missing hyperparameters");
  SplitSample out;
  const int k = static_cast<int>(g.size());
  const std::size_t d = g.components.front().mean.size();
  SplitRecord rec;
  rec.group = index;
  rec.aux.u0 = uniform01(rng);
  rec.choice.k_total = uniform01(rng) < 0.5 ? 2 * k - 1 : 2 * k;
  const auto pairs = admissible_k_pairs(rec.choice.k_total, *ctx.hyper);
  if (pairs.empty()) {
    out.failure = "no admissible component-count pair";
    return out;
  }
  rec.m0 = static_cast<int>(pairs.size());
  const auto& pick = pairs[std::min(pairs.size() - 1, static_cast<std::size_t>(uniform01(rng) * pairs.size()))];
  rec.choice.k1 = pick.first;
  rec.choice.k2 = pick.second;
  if (rec.choice.k_total % 2 == 1) {
    rec.choice.singleton = std::min(k - 1, static_cast<int>(uniform01(rng) * k));
  }
  const UEnumeration en = admissible_u(g.mixing, rec.choice.k1, rec.choice.singleton, ctx.enumeration_cap);
  if (en.capped) {
    out.failure = "admissible u enumeration exceeded cap";
    return out;
  }
  if (en.vectors.empty()) {
    out.failure = "no admissible u vector";
    return out;
  }
  rec.m1 = en.vectors.size();
  rec.choice.u = en.vectors[std::min(en.vectors.size() - 1, static_cast<std::size_t>(uniform01(rng) * en.vectors.size()))];

  const std::size_t kk = g.size();
  rec.aux.v.assign(kk, 0.5);
  rec.aux.y.assign(kk, {});
  rec.aux.z.assign(kk, {});
  std::vector<std::size_t> a1;
  for (std::size_t c = 0; c < kk; ++c) {
    if (static_cast<int>(c) == rec.choice.singleton) continue;
    if (rec.choice.u[c] == 1) {
      a1.push_back(c);
    } else {
      rec.aux.v[c] = uniform01(rng);
    }
  }
  double remaining = first_side_remainder(g.mixing, rec.choice);
  double rest = 0.0;
  for (std::size_t c : a1) rest += 2.0 * g.mixing[c];
  for (std::size_t i = 0; i < a1.size(); ++i) {
    const std::size_t c = a1[i];
    const double w = 2.0 * g.mixing[c];
    rest -= w;
    if (i + 1 == a1.size()) {
      rec.aux.v[c] = remaining / w;
      break;
    }
    const double lo = std::max(0.0, (remaining - rest) / w);
    const double hi = std::min(1.0, remaining / w);
    rec.aux.v[c] = lo + (hi - lo) * uniform01(rng);
    remaining -= w * rec.aux.v[c];
  }
  for (std::size_t c : a1) {
    if (!(rec.aux.v[c] > 0.0 && rec.aux.v[c] < 1.0)) {
      out.failure = "probability split fell on the boundary";
      return out;
    }
  }

  double lower = -kInf;
  for (std::size_t c = 0; c < kk; ++c) {
    const ComponentParams& parent = g.components[c];
    if (static_cast<int>(c) == rec.choice.singleton) {
      rec.aux.y[c] = parent.mean;
      rec.aux.z[c] = parent.var;
      lower = parent.mean[0];
      continue;
    }
    const double v = rec.aux.v[c];
    const double upper = c + 1 < kk ? g.components[c + 1].mean[0] : kInf;
    const auto [a, b] = y_interval(parent.mean[0], v, lower, upper, rec.choice.u[c]);
    std::vector<double> y(d), z(d);
    try {
      y[0] = truncated_normal_draw(parent.mean[0], ctx.proposal_scale * std::sqrt(parent.var[0]), a, b, rng);
    } catch (const std::exception&) {
      out.failure = "mean auxiliary interval is numerically empty";
      return out;
    }
    for (std::size_t bb = 1; bb < d; ++bb) {
      y[bb] = parent.mean[bb] + ctx.proposal_scale * std::sqrt(parent.var[bb]) * standard_normal(rng);
    }
    for (std::size_t bb = 0; bb < d; ++bb) {
      const double s = parent.var[bb];
      try {
        z[bb] = truncated_normal_draw(s, ctx.proposal_scale * s, 0.0, s / v, rng);
      } catch (const std::exception&) {
        out.failure = "variance auxiliary interval is numerically empty";
        return out;
      }
    }
    lower = std::max(y[0], second_half(parent.mean[0], v, y[0]));
    rec.aux.y[c] = std::move(y);
    rec.aux.z[c] = std::move(z);
  }
  rec.log_aux_density = split_aux_log_density(g, rec.choice, rec.aux, ctx);
  rec.log_jacobian = split_log_jacobian(g, rec.choice, rec.aux);
  if (std::isinf(rec.log_aux_density)) {
    out.failure = "auxiliaries fell outside the proposal support";
    return out;
  }
  out.record = std::move(rec);
  return out;
}

namespace {

// Continuous split map in a simplex chart: the probability of the last
// straddling component is implied by the others, as are both of its halves.
struct SplitChart {
  const GroupParams* g;
  const SplitChoice* choice;
  std::size_t d;
  int last;

  Eigen::VectorXd inputs(const SplitAux& aux) const {
    std::vector<double> x{g->weight, aux.u0};
    for (std::size_t c = 0; c < g->size(); ++c) {
      if (static_cast<int>(c) != last) x.push_back(g->mixing[c]);
    }
    for (std::size_t c = 0; c < g->size(); ++c) {
      if (static_cast<int>(c) != last && static_cast<int>(c) != choice->singleton) x.push_back(aux.v[c]);
    }
    for (const auto& comp : g->components) x.insert(x.end(), comp.mean.begin(), comp.mean.end());
    for (std::size_t c = 0; c < g->size(); ++c) {
      if (static_cast<int>(c) != choice->singleton) x.insert(x.end(), aux.y[c].begin(), aux.y[c].end());
    }
    for (const auto& comp : g->components) x.insert(x.end(), comp.var.begin(), comp.var.end());
    for (std::size_t c = 0; c < g->size(); ++c) {
      if (static_cast<int>(c) != choice->singleton) x.insert(x.end(), aux.z[c].begin(), aux.z[c].end());
    }
    return Eigen::Map<Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  }

  Eigen::VectorXd outputs(const Eigen::VectorXd& x) const {
    const std::size_t k = g->size();
    std::size_t pos = 0;
    const double weight = x[static_cast<Eigen::Index>(pos++)];
    const double u0 = x[static_cast<Eigen::Index>(pos++)];
    std::vector<double> p(k), v(k, 0.5);
    double psum = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (static_cast<int>(c) == last) continue;
      p[c] = x[static_cast<Eigen::Index>(pos++)];
      psum += p[c];
    }
    p[static_cast<std::size_t>(last)] = 1.0 - psum;
    for (std::size_t c = 0; c < k; ++c) {
      if (static_cast<int>(c) != last && static_cast<int>(c) != choice->singleton) v[c] = x[static_cast<Eigen::Index>(pos++)];
    }
    double remaining = 1.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (choice->u[c] == 2) remaining -= 2.0 * p[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (choice->u[c] == 1 && static_cast<int>(c) != last && static_cast<int>(c) != choice->singleton) {
        remaining -= 2.0 * p[c] * v[c];
      }
    }
    v[static_cast<std::size_t>(last)] = remaining / (2.0 * p[static_cast<std::size_t>(last)]);
    auto take_block = [&](std::vector<std::vector<double>>& dst, bool skip_singleton) {
      dst.assign(k, std::vector<double>(d, 0.0));
      for (std::size_t c = 0; c < k; ++c) {
        if (skip_singleton && static_cast<int>(c) == choice->singleton) continue;
        for (std::size_t b = 0; b < d; ++b) dst[c][b] = x[static_cast<Eigen::Index>(pos++)];
      }
    };
    std::vector<std::vector<double>> mu, y, s, z;
    take_block(mu, false);
    take_block(y, true);
    take_block(s, false);
    take_block(z, true);

    std::vector<double> out{u0 * weight, (1.0 - u0) * weight};
    for (std::size_t c = 0; c < k; ++c) {
      if (static_cast<int>(c) == last) continue;
      if (static_cast<int>(c) == choice->singleton) {
        out.push_back(2.0 * p[c]);
      } else {
        out.push_back(2.0 * v[c] * p[c]);
        out.push_back(2.0 * (1.0 - v[c]) * p[c]);
      }
    }
    auto emit = [&](const std::vector<std::vector<double>>& parent, const std::vector<std::vector<double>>& first) {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t b = 0; b < d; ++b) {
          if (static_cast<int>(c) == choice->singleton) {
            out.push_back(parent[c][b]);
          } else {
            out.push_back(first[c][b]);
            out.push_back(second_half(parent[c][b], v[c], first[c][b]));
          }
        }
      }
    };
    emit(mu, y);
    emit(s, z);
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
  }
};

}  // namespace

JacobianCheck jacobian_check_split(const GroupParams& g, const SplitChoice& choice,
                                   const SplitAux& aux, double step) {
  if (!(g.weight > 0.0)) throw std::invalid_argument("jacobian_check_split: zero weight at the evaluation point");
  if (!shape_ok(g, choice, aux)) throw std::invalid_argument("jacobian_check_split: inconsistent split record");
  const int last = last_straddling(choice);
  if (last < 0) throw std::invalid_argument("jacobian_check_split: no straddling component");
  const SplitChart chart{&g, &choice, g.components.front().mean.size(), last};
  const Eigen::VectorXd x = chart.inputs(aux);
  const Eigen::Index n = x.size();
  const Eigen::VectorXd base = chart.outputs(x);
  if (base.size() != n) throw std::logic_error("jacobian_check_split: chart dimensions do not match");
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = step * std::max(1e-2, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (chart.outputs(xp) - chart.outputs(xm)) / (2.0 * h);
  }
  JacobianCheck out;
  out.analytic = split_log_jacobian(g, choice, aux);
  out.numeric = std::log(std::abs(jac.partialPivLu().determinant()));
  out.relative_error = std::abs(std::expm1(out.numeric - out.analytic));
  return out;
}

}  // namespace hiermix
