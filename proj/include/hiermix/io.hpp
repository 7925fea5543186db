#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hiermix/model.hpp"
#include "hiermix/priors.hpp"
#include "hiermix/random.hpp"
#include "hiermix/sampler.hpp"

namespace hiermix {

enum class DataFormat { Auto, Csv, Json };

DataFormat parse_format(const std::string& name);

/// CSV: header `object_id,x1,...,xd`, one row per point, '#' comment lines.
/// JSON: top-level list of {"id": ..., "points": [[...], ...]}.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format = DataFormat::Auto);
void save_dataset(const Dataset& data, const std::filesystem::path& path,
                  DataFormat format = DataFormat::Auto);

/// Centres and scales each coordinate in place and records the transform.
const Standardization& standardize(Dataset& data);
/// Maps parameters fitted on standardized data back to original units.
HierParams destandardize(const HierParams& theta, const Standardization& st);

/// Parameter spec: {"groups": [{"weight", "mixing", "means", "variances"}, ...]}.
/// Sums within 1e-9 of one are renormalised; violations raise DataError.
HierParams load_params(const std::filesystem::path& path);
void save_params(const HierParams& theta, const std::filesystem::path& path);
std::string params_to_json(const HierParams& theta);
HierParams params_from_json(const std::string& text);

/// Keys absent from the file keep their data-driven defaults.
Hyperparameters load_hyperparameters(const std::filesystem::path& path, const Dataset& data);
std::string hyperparameters_to_json(const Hyperparameters& h);
Hyperparameters hyperparameters_from_json(const std::string& text, const Hyperparameters& base);

struct PointLaw {
  enum class Kind { Fixed, Poisson } kind = Kind::Poisson;
  double value = 60.0;
};

/// "fixed:N" or "poisson:M".
PointLaw parse_point_law(const std::string& text);

struct Simulation {
  Dataset data;
  Labels truth;
};

/// Poisson counts are truncated below at one point.
Simulation simulate_population(const HierParams& theta, std::size_t n_objects, const PointLaw& law,
                               Rng& rng);
/// CSV `object_id,point,group,component`, one-based labels.
void save_labels(const Dataset& data, const Labels& labels, const std::filesystem::path& path);

inline constexpr int kTraceVersion = 1;

/// Line-delimited JSON: a header carrying record counts, then samples, then monitor records.
void save_trace(const ChainTrace& trace, const std::filesystem::path& path);
ChainTrace load_trace(const std::filesystem::path& path);

std::string sampler_config_to_json(const SamplerConfig& cfg);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

}  // namespace hiermix
