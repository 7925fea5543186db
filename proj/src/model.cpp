#include "hiermix/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hiermix/special.hpp"

namespace hiermix {

std::size_t Dataset::total_points() const {
  std::size_t total = 0;
  for (const auto& obj : objects) total += obj.size(dimension);
  return total;
}

std::size_t HierParams::dimension() const {
  if (groups.empty() || groups.front().components.empty()) return 0;
  return groups.front().components.front().mean.size();
}

std::vector<int> HierParams::component_counts() const {
  std::vector<int> k;
  k.reserve(groups.size());
  for (const auto& g : groups) k.push_back(static_cast<int>(g.size()));
  return k;
}

double component_log_density(Point x, const ComponentParams& c) {
  if (x.size() != c.mean.size() || c.var.size() != c.mean.size()) {
    throw std::invalid_argument("component_log_density: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t b = 0; b < x.size(); ++b) acc += log_normal_pdf(x[b], c.mean[b], c.var[b]);
  return acc;
}

double group_log_density(Point x, const GroupParams& g) {
  if (g.components.empty()) throw std::invalid_argument("group_log_density: no components");
  std::vector<double> terms(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    terms[k] = std::log(g.mixing[k]) + component_log_density(x, g.components[k]);
  }
  return log_sum_exp(terms);
}

double object_log_density(const ObjectObservations& obj, std::size_t dimension,
                          const HierParams& theta) {
  const std::size_t n = obj.size(dimension);
  if (n == 0) return 0.0;
  if (dimension != theta.dimension()) {
    throw std::invalid_argument("object_log_density: dimension mismatch");
  }
  std::vector<double> terms(theta.num_groups());
  for (std::size_t g = 0; g < theta.num_groups(); ++g) {
    const GroupEvaluator eval(theta.groups[g]);
    double acc = std::log(theta.groups[g].weight);
    for (std::size_t j = 0; j < n; ++j) acc += eval.density(obj.point(j, dimension));
    terms[g] = acc;
  }
  return log_sum_exp(terms);
}

double log_likelihood(const Dataset& data, const HierParams& theta) {
  if (data.num_objects() == 0) return 0.0;
  std::vector<GroupEvaluator> evals;
  evals.reserve(theta.num_groups());
  for (const auto& g : theta.groups) evals.emplace_back(g);
  if (data.dimension != theta.dimension()) {
    throw std::invalid_argument("log_likelihood: dimension mismatch");
  }
  std::vector<double> terms(theta.num_groups());
  double total = 0.0;
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    const std::size_t n = data.num_points(i);
    if (n == 0) continue;
    for (std::size_t g = 0; g < evals.size(); ++g) {
      double acc = std::log(theta.groups[g].weight);
      for (std::size_t j = 0; j < n; ++j) acc += evals[g].density(data.point(i, j));
      terms[g] = acc;
    }
    total += log_sum_exp(terms);
  }
  return total;
}

double augmented_log_likelihood(const Dataset& data, const HierParams& theta,
                                const Labels& labels) {
  if (labels.group.size() != data.num_objects() ||
      labels.component.size() != data.num_objects()) {
    throw std::invalid_argument("augmented_log_likelihood: label shape mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    const int g = labels.group[i];
    if (g < 0 || static_cast<std::size_t>(g) >= theta.num_groups()) {
      throw std::out_of_range("augmented_log_likelihood: group label out of range");
    }
    const GroupParams& group = theta.groups[static_cast<std::size_t>(g)];
    const auto& z = labels.component[i];
    if (z.size() != data.num_points(i)) {
      throw std::invalid_argument("augmented_log_likelihood: component label count mismatch");
    }
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (z[j] < 0 || static_cast<std::size_t>(z[j]) >= group.size()) {
        throw std::out_of_range("augmented_log_likelihood: component label out of range");
      }
      total += component_log_density(data.point(i, j), group.components[static_cast<std::size_t>(z[j])]);
    }
  }
  return total;
}

GroupEvaluator::GroupEvaluator(const GroupParams& g)
    : dim_(g.components.empty() ? 0 : g.components.front().mean.size()) {
  const std::size_t k = g.size();
  log_weight_.resize(k);
  log_norm_.resize(k);
  mean_.resize(k * dim_);
  inv_var_.resize(k * dim_);
  for (std::size_t c = 0; c < k; ++c) {
    log_weight_[c] = std::log(g.mixing[c]);
    double norm = 0.0;
    for (std::size_t b = 0; b < dim_; ++b) {
      const double v = g.components[c].var[b];
      norm += -0.5 * (kLogTwoPi + std::log(v));
      mean_[c * dim_ + b] = g.components[c].mean[b];
      inv_var_[c * dim_ + b] = 1.0 / v;
    }
    log_norm_[c] = norm;
  }
}

double GroupEvaluator::component(Point x, std::size_t k) const {
  double acc = log_norm_[k];
  const double* mu = mean_.data() + k * dim_;
  const double* iv = inv_var_.data() + k * dim_;
  for (std::size_t b = 0; b < dim_; ++b) {
    const double r = x[b] - mu[b];
    acc -= 0.5 * r * r * iv[b];
  }
  return acc;
}

void GroupEvaluator::weighted_components(Point x, std::span<double> out) const {
  for (std::size_t k = 0; k < size(); ++k) out[k] = log_weight_[k] + component(x, k);
}

double GroupEvaluator::density(Point x) const {
  if (size() == 1) return log_weight_[0] + component(x, 0);
  double top = kNegInf;
  double buf[64];
  std::vector<double> heap;
  double* terms = buf;
  if (size() > 64) {
    heap.resize(size());
    terms = heap.data();
  }
  for (std::size_t k = 0; k < size(); ++k) {
    terms[k] = log_weight_[k] + component(x, k);
    top = std::max(top, terms[k]);
  }
  if (std::isinf(top)) return top;
  double acc = 0.0;
  for (std::size_t k = 0; k < size(); ++k) acc += std::exp(terms[k] - top);
  return top + std::log(acc);
}

std::string ValidationReport::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i];
  }
  return out.str();
}

ValidationReport validate(const HierParams& theta) {
  ValidationReport report;
  auto& v = report.violations;
  if (theta.groups.empty()) {
    v.push_back("no groups");
    return report;
  }
  const std::size_t d = theta.dimension();
  if (d == 0) v.push_back("dimension is zero");
  double weight_sum = 0.0;
  for (std::size_t g = 0; g < theta.num_groups(); ++g) {
    const GroupParams& group = theta.groups[g];
    const std::string tag = "group " + std::to_string(g + 1);
    if (!std::isfinite(group.weight) || !(group.weight > 0.0) || !(group.weight < 1.0 || theta.num_groups() == 1)) {
      v.push_back(tag + ": weight not in (0,1)");
    }
    weight_sum += group.weight;
    if (g > 0 && !(theta.groups[g - 1].weight < group.weight)) {
      v.push_back(tag + ": weights not strictly ascending");
    }
    if (group.components.empty()) {
      v.push_back(tag + ": no components");
      continue;
    }
    if (group.mixing.size() != group.components.size()) {
      v.push_back(tag + ": mixing length differs from component count");
      continue;
    }
    double mix_sum = 0.0;
    for (std::size_t k = 0; k < group.size(); ++k) {
      const std::string ctag = tag + " component " + std::to_string(k + 1);
      const double p = group.mixing[k];
      if (!std::isfinite(p) || !(p > 0.0)) v.push_back(ctag + ": mixing probability not positive");
      mix_sum += p;
      const ComponentParams& c = group.components[k];
      if (c.mean.size() != d || c.var.size() != d) {
        v.push_back(ctag + ": dimension mismatch");
        continue;
      }
      for (std::size_t b = 0; b < d; ++b) {
        if (!std::isfinite(c.mean[b])) v.push_back(ctag + ": non-finite mean");
        if (!std::isfinite(c.var[b]) || !(c.var[b] > 0.0)) {
          v.push_back(ctag + ": variance not positive");
        }
      }
      if (k > 0 && !(group.components[k - 1].mean[0] < c.mean[0])) {
        v.push_back(ctag + ": first mean coordinates not strictly ascending");
      }
    }
    if (std::abs(mix_sum - 1.0) > kSimplexTolerance) v.push_back(tag + ": mixing probabilities do not sum to 1");
  }
  if (std::abs(weight_sum - 1.0) > kSimplexTolerance) v.push_back("group weights do not sum to 1");
  return report;
}

ValidationReport validate_labels(const Dataset& data, const HierParams& theta,
                                 const Labels& labels) {
  ValidationReport report;
  if (labels.group.size() != data.num_objects() || labels.component.size() != data.num_objects()) {
    report.violations.push_back("label vectors do not match the number of objects");
    return report;
  }
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    const int g = labels.group[i];
    if (g < 0 || static_cast<std::size_t>(g) >= theta.num_groups()) {
      report.violations.push_back("object " + std::to_string(i) + ": group label out of range");
      continue;
    }
    const auto& z = labels.component[i];
    if (z.size() != data.num_points(i)) {
      report.violations.push_back("object " + std::to_string(i) + ": component label count mismatch");
      continue;
    }
    const int k = static_cast<int>(theta.groups[static_cast<std::size_t>(g)].size());
    for (int zj : z) {
      if (zj < 0 || zj >= k) {
        report.violations.push_back("object " + std::to_string(i) + ": component label out of range");
        break;
      }
    }
  }
  return report;
}

void canonicalize(HierParams& theta, Labels* labels) {
  // Components within each group by first mean coordinate.
  for (std::size_t g = 0; g < theta.num_groups(); ++g) {
    GroupParams& group = theta.groups[g];
    std::vector<std::size_t> order(group.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return group.components[a].mean[0] < group.components[b].mean[0];
    });
    std::vector<int> rank(order.size());
    GroupParams sorted;
    sorted.weight = group.weight;
    for (std::size_t r = 0; r < order.size(); ++r) {
      rank[order[r]] = static_cast<int>(r);
      sorted.mixing.push_back(group.mixing[order[r]]);
      sorted.components.push_back(std::move(group.components[order[r]]));
    }
    group = std::move(sorted);
    if (labels) {
      for (std::size_t i = 0; i < labels->group.size(); ++i) {
        if (labels->group[i] != static_cast<int>(g)) continue;
        for (int& z : labels->component[i]) z = rank[static_cast<std::size_t>(z)];
      }
    }
  }
  std::vector<std::size_t> order(theta.num_groups());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return theta.groups[a].weight < theta.groups[b].weight;
  });
  std::vector<int> rank(order.size());
  std::vector<GroupParams> sorted;
  sorted.reserve(order.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    rank[order[r]] = static_cast<int>(r);
    sorted.push_back(std::move(theta.groups[order[r]]));
  }
  theta.groups = std::move(sorted);
  if (labels) {
    for (int& w : labels->group) w = rank[static_cast<std::size_t>(w)];
  }
}

bool renormalize(HierParams& theta) {
  double weight_sum = 0.0;
  for (const auto& g : theta.groups) weight_sum += g.weight;
  if (std::abs(weight_sum - 1.0) > kRenormalizeTolerance) return false;
  for (const auto& g : theta.groups) {
    const double s = std::accumulate(g.mixing.begin(), g.mixing.end(), 0.0);
    if (std::abs(s - 1.0) > kRenormalizeTolerance) return false;
  }
  for (auto& g : theta.groups) {
    g.weight /= weight_sum;
    const double s = std::accumulate(g.mixing.begin(), g.mixing.end(), 0.0);
    for (double& p : g.mixing) p /= s;
  }
  return true;
}

}  // namespace hiermix
