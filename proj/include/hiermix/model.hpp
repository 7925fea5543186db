#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hiermix {

/// One d-variate observation (a minutia location for fingerprint data).
using Point = std::span<const double>;

/// Observations made on one object, stored row-major (n points x d).
struct ObjectObservations {
  std::string id;
  std::vector<double> coords;

  std::size_t size(std::size_t dimension) const { return dimension ? coords.size() / dimension : 0; }
  Point point(std::size_t j, std::size_t dimension) const {
    return Point(coords.data() + j * dimension, dimension);
  }
};

/// Per-dimension affine map applied to the coordinates: stored = (raw - center) / scale.
struct Standardization {
  std::vector<double> center;
  std::vector<double> scale;
};

struct Dataset {
  std::size_t dimension = 2;
  std::vector<ObjectObservations> objects;
  std::optional<Standardization> standardization;

  std::size_t num_objects() const { return objects.size(); }
  std::size_t num_points(std::size_t i) const { return objects[i].size(dimension); }
  std::size_t total_points() const;
  Point point(std::size_t i, std::size_t j) const { return objects[i].point(j, dimension); }
};

/// Diagonal normal component: means and per-coordinate variances.
struct ComponentParams {
  std::vector<double> mean;
  std::vector<double> var;
};

/// One population group: weight, second-level mixing probabilities and components
/// sorted by first mean coordinate.
struct GroupParams {
  double weight = 1.0;
  std::vector<double> mixing;
  std::vector<ComponentParams> components;

  std::size_t size() const { return components.size(); }
};

/// Full hierarchical mixture state; groups sorted by ascending weight.
struct HierParams {
  std::vector<GroupParams> groups;

  std::size_t num_groups() const { return groups.size(); }
  std::size_t dimension() const;
  std::vector<int> component_counts() const;
};

/// Augmented labels: group per object, component per observation (zero-based).
struct Labels {
  std::vector<int> group;
  std::vector<std::vector<int>> component;
};

double component_log_density(Point x, const ComponentParams& c);
double group_log_density(Point x, const GroupParams& g);
double object_log_density(const ObjectObservations& obj, std::size_t dimension,
                          const HierParams& theta);
double log_likelihood(const Dataset& data, const HierParams& theta);
/// Sum of log component densities under the given labels; excludes weight and
/// mixing-probability factors, which belong to the label prior.
double augmented_log_likelihood(const Dataset& data, const HierParams& theta,
                                const Labels& labels);

/// Precomputed terms for evaluating one group's components repeatedly.
class GroupEvaluator {
 public:
  explicit GroupEvaluator(const GroupParams& g);

  std::size_t size() const { return log_weight_.size(); }
  /// log phi_d(x | component k), without the mixing probability.
  double component(Point x, std::size_t k) const;
  /// Fills out[k] = log p_k + log phi_d(x | component k).
  void weighted_components(Point x, std::span<double> out) const;
  /// log q_g(x).
  double density(Point x) const;

 private:
  std::size_t dim_;
  std::vector<double> log_weight_;
  std::vector<double> log_norm_;
  std::vector<double> mean_;
  std::vector<double> inv_var_;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

inline constexpr double kSimplexTolerance = 1e-12;
inline constexpr double kRenormalizeTolerance = 1e-9;

/// Reports every violated invariant: weight ordering, mean ordering, simplex sums,
/// positivity, finiteness and dimensional consistency.
ValidationReport validate(const HierParams& theta);
ValidationReport validate_labels(const Dataset& data, const HierParams& theta,
                                 const Labels& labels);

/// Sorts groups by weight and components by first mean coordinate; labels are
/// permuted alongside when given.
void canonicalize(HierParams& theta, Labels* labels = nullptr);

/// Renormalises weight and mixing sums found within kRenormalizeTolerance of one.
/// Returns false (leaving theta untouched) if any sum is further off.
bool renormalize(HierParams& theta);

}  // namespace hiermix
