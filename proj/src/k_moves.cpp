#include "hiermix/k_moves.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "hiermix/special.hpp"

namespace hiermix {

namespace {

double log_beta22(double x) {
  if (!(x > 0.0 && x < 1.0)) return kNegInf;
  return std::log(6.0) + std::log(x) + std::log1p(-x);
}

struct Halves {
  double p1, p2;
  std::vector<double> mu1, mu2, s1, s2;
};

Halves split_values(double p, const std::vector<double>& mu, const std::vector<double>& s,
                    const KSplitAux& aux) {
  Halves h;
  h.p1 = aux.u1 * p;
  h.p2 = (1.0 - aux.u1) * p;
  const std::size_t d = mu.size();
  h.mu1.resize(d);
  h.mu2.resize(d);
  h.s1.resize(d);
  h.s2.resize(d);
  for (std::size_t b = 0; b < d; ++b) {
    const double sd = std::sqrt(s[b]);
    h.mu1[b] = mu[b] - aux.u2[b] * sd * std::sqrt(h.p2 / h.p1);
    h.mu2[b] = mu[b] + aux.u2[b] * sd * std::sqrt(h.p1 / h.p2);
    const double shrink = (1.0 - aux.u2[b] * aux.u2[b]) * s[b] * p;
    h.s1[b] = aux.u3[b] * shrink / h.p1;
    h.s2[b] = (1.0 - aux.u3[b]) * shrink / h.p2;
  }
  return h;
}

}  // namespace

KSplitAux sample_k_split_aux(const GroupParams& g, std::size_t component, Rng& rng) {
  const std::size_t d = g.components.front().mean.size();
  KSplitAux aux;
  aux.component = component;
  aux.u1 = beta_draw(2.0, 2.0, rng);
  aux.u2.resize(d);
  aux.u3.resize(d);
  for (std::size_t b = 0; b < d; ++b) {
    const double beta = beta_draw(2.0, 2.0, rng);
    aux.u2[b] = b == 0 ? beta : 2.0 * beta - 1.0;
    aux.u3[b] = uniform01(rng);
  }
  return aux;
}

double k_split_aux_log_density(const KSplitAux& aux) {
  double acc = log_beta22(aux.u1);
  for (std::size_t b = 0; b < aux.u2.size(); ++b) {
    if (b == 0) {
      acc += log_beta22(aux.u2[b]);
    } else {
      acc += log_beta22(0.5 * (aux.u2[b] + 1.0)) - std::log(2.0);
    }
    if (!(aux.u3[b] > 0.0 && aux.u3[b] < 1.0)) return kNegInf;
  }
  return acc;
}

std::optional<GroupParams> k_split(const GroupParams& g, const KSplitAux& aux) {
  const std::size_t j = aux.component;
  if (j >= g.size()) throw std::out_of_range("k_split: component index out of range");
  const ComponentParams& parent = g.components[j];
  const Halves h = split_values(g.mixing[j], parent.mean, parent.var, aux);
  if (j > 0 && !(g.components[j - 1].mean[0] < h.mu1[0])) return std::nullopt;
  if (j + 1 < g.size() && !(h.mu2[0] < g.components[j + 1].mean[0])) return std::nullopt;
  if (!(h.mu1[0] < h.mu2[0])) return std::nullopt;
  for (std::size_t b = 0; b < h.s1.size(); ++b) {
    if (!(h.s1[b] > 0.0) || !(h.s2[b] > 0.0)) return std::nullopt;
  }
  if (!(h.p1 > 0.0) || !(h.p2 > 0.0)) return std::nullopt;
  GroupParams out;
  out.weight = g.weight;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (k != j) {
      out.mixing.push_back(g.mixing[k]);
      out.components.push_back(g.components[k]);
      continue;
    }
    out.mixing.push_back(h.p1);
    out.components.push_back({h.mu1, h.s1});
    out.mixing.push_back(h.p2);
    out.components.push_back({h.mu2, h.s2});
  }
  return out;
}

GroupParams k_merge(const GroupParams& g, std::size_t j) {
  if (j + 1 >= g.size()) throw std::out_of_range("k_merge: need components j and j+1");
  const std::size_t d = g.components.front().mean.size();
  const double p1 = g.mixing[j];
  const double p2 = g.mixing[j + 1];
  const double p = p1 + p2;
  const ComponentParams& c1 = g.components[j];
  const ComponentParams& c2 = g.components[j + 1];
  ComponentParams merged;
  merged.mean.resize(d);
  merged.var.resize(d);
  for (std::size_t b = 0; b < d; ++b) {
    const double mu = (p1 * c1.mean[b] + p2 * c2.mean[b]) / p;
    const double second = (p1 * (c1.mean[b] * c1.mean[b] + c1.var[b]) +
                           p2 * (c2.mean[b] * c2.mean[b] + c2.var[b])) / p;
    merged.mean[b] = mu;
    merged.var[b] = second - mu * mu;
  }
  GroupParams out;
  out.weight = g.weight;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (k == j + 1) continue;
    if (k == j) {
      out.mixing.push_back(p);
      out.components.push_back(std::move(merged));
    } else {
      out.mixing.push_back(g.mixing[k]);
      out.components.push_back(g.components[k]);
    }
  }
  return out;
}

std::optional<KSplitAux> k_merge_aux(const GroupParams& g, std::size_t j) {
  const GroupParams merged = k_merge(g, j);
  const double p1 = g.mixing[j];
  const double p2 = g.mixing[j + 1];
  const double p = p1 + p2;
  const ComponentParams& c1 = g.components[j];
  const ComponentParams& c2 = g.components[j + 1];
  const ComponentParams& m = merged.components[j];
  const std::size_t d = m.mean.size();
  KSplitAux aux;
  aux.component = j;
  aux.u1 = p1 / p;
  aux.u2.resize(d);
  aux.u3.resize(d);
  const double spread = std::sqrt(p1 / p2) + std::sqrt(p2 / p1);
  for (std::size_t b = 0; b < d; ++b) {
    if (!(m.var[b] > 0.0)) return std::nullopt;
    aux.u2[b] = (c2.mean[b] - c1.mean[b]) / (std::sqrt(m.var[b]) * spread);
    const double shrink = 1.0 - aux.u2[b] * aux.u2[b];
    if (!(shrink > 0.0)) return std::nullopt;
    aux.u3[b] = c1.var[b] * p1 / (shrink * m.var[b] * p);
    if (!(aux.u3[b] > 0.0 && aux.u3[b] < 1.0)) return std::nullopt;
  }
  if (!(aux.u2[0] > 0.0 && aux.u2[0] < 1.0)) return std::nullopt;
  return aux;
}

double k_split_log_jacobian(const GroupParams& before, const KSplitAux& aux) {
  const std::size_t j = aux.component;
  const double p = before.mixing[j];
  const ComponentParams& c = before.components[j];
  const Halves h = split_values(p, c.mean, c.var, aux);
  double acc = std::log(p);
  for (std::size_t b = 0; b < c.mean.size(); ++b) {
    const double u2 = aux.u2[b];
    const double u3 = aux.u3[b];
    acc += std::log(std::abs(h.mu2[b] - h.mu1[b])) + std::log(h.s1[b]) + std::log(h.s2[b]) -
           std::log(std::abs(u2)) - std::log1p(-u2 * u2) - std::log(u3) - std::log1p(-u3) -
           std::log(c.var[b]);
  }
  return acc;
}

double k_split_numeric_log_jacobian(const GroupParams& before, const KSplitAux& aux,
                                    double step) {
  const std::size_t j = aux.component;
  const ComponentParams& c = before.components[j];
  const std::size_t d = c.mean.size();
  const Eigen::Index n = static_cast<Eigen::Index>(2 + 4 * d);
  // Inputs: p, u1, then per coordinate (mu, s, u2, u3).
  Eigen::VectorXd x(n);
  x[0] = before.mixing[j];
  x[1] = aux.u1;
  for (std::size_t b = 0; b < d; ++b) {
    const auto o = static_cast<Eigen::Index>(2 + 4 * b);
    x[o] = c.mean[b];
    x[o + 1] = c.var[b];
    x[o + 2] = aux.u2[b];
    x[o + 3] = aux.u3[b];
  }
  auto map = [&](const Eigen::VectorXd& in) {
    KSplitAux a;
    a.u1 = in[1];
    a.u2.resize(d);
    a.u3.resize(d);
    std::vector<double> mu(d), s(d);
    for (std::size_t b = 0; b < d; ++b) {
      const auto o = static_cast<Eigen::Index>(2 + 4 * b);
      mu[b] = in[o];
      s[b] = in[o + 1];
      a.u2[b] = in[o + 2];
      a.u3[b] = in[o + 3];
    }
    const Halves h = split_values(in[0], mu, s, a);
    Eigen::VectorXd out(n);
    out[0] = h.p1;
    out[1] = h.p2;
    for (std::size_t b = 0; b < d; ++b) {
      const auto o = static_cast<Eigen::Index>(2 + 4 * b);
      out[o] = h.mu1[b];
      out[o + 1] = h.mu2[b];
      out[o + 2] = h.s1[b];
      out[o + 3] = h.s2[b];
    }
    return out;
  };
  Eigen::MatrixXd jac(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = step * std::max(1e-2, std::abs(x[i]));
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    jac.col(i) = (map(xp) - map(xm)) / (2.0 * h);
  }
  return std::log(std::abs(jac.partialPivLu().determinant()));
}

}  // namespace hiermix
