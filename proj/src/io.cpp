#include "hiermix/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <unistd.h>

#include "json.hpp"

#include "hiermix/error.hpp"

namespace hiermix {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (ch == '"' && quoted && i + 1 < line.size() && line[i + 1] == '"') {
      cur.push_back('"');
      ++i;
    } else if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& s, std::size_t line, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw DataError("line " + std::to_string(line) + ": " + what + " '" + s + "' is not a finite number");
  }
  return v;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  return out + "\"";
}

std::string format_double(double v) {
  // Shortest representation that round-trips.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

DataFormat resolve(const fs::path& path, DataFormat format) {
  if (format != DataFormat::Auto) return format;
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".json" ? DataFormat::Json : DataFormat::Csv;
}

Dataset load_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  std::size_t d = 0;
  bool have_header = false;
  Dataset data;
  std::unordered_map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::string marker = "# hiermix dataset v";
      if (t.rfind(marker, 0) == 0 && t.substr(marker.size()) != "1") {
        throw DataError("line " + std::to_string(lineno) + ": unsupported dataset version " + t.substr(marker.size()));
      }
      continue;
    }
    const std::vector<std::string> fields = split_csv(t);
    if (!have_header) {
      if (fields.size() < 2) throw DataError("line " + std::to_string(lineno) + ": header needs object_id and at least one coordinate");
      d = fields.size() - 1;
      have_header = true;
      continue;
    }
    if (fields.size() != d + 1) {
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(d + 1) + " fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw DataError("line " + std::to_string(lineno) + ": empty object id");
    auto [it, inserted] = index.emplace(fields[0], data.objects.size());
    if (inserted) data.objects.push_back({fields[0], {}});
    auto& coords = data.objects[it->second].coords;
    for (std::size_t b = 0; b < d; ++b) coords.push_back(parse_double(fields[b + 1], lineno, "coordinate"));
  }
  if (!have_header) throw DataError("dataset file is empty");
  data.dimension = d;
  return data;
}

Dataset load_json_dataset(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("dataset JSON: ") + e.what());
  }
  const json* list = &doc;
  std::size_t d = 0;
  if (doc.is_object()) {
    if (doc.contains("dimension")) d = doc.at("dimension").get<std::size_t>();
    if (!doc.contains("objects")) throw DataError("dataset JSON: missing 'objects'");
    list = &doc.at("objects");
  }
  if (!list->is_array()) throw DataError("dataset JSON: expected a list of objects");
  Dataset data;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t pos = 0;
  for (const auto& obj : *list) {
    const std::string where = "dataset JSON object " + std::to_string(pos++);
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("points")) {
      throw DataError(where + ": needs 'id' and 'points'");
    }
    const std::string id = obj.at("id").is_string() ? obj.at("id").get<std::string>() : obj.at("id").dump();
    auto [it, inserted] = index.emplace(id, data.objects.size());
    if (inserted) data.objects.push_back({id, {}});
    auto& coords = data.objects[it->second].coords;
    for (const auto& pt : obj.at("points")) {
      if (!pt.is_array()) throw DataError(where + ": point is not a list");
      if (d == 0) d = pt.size();
      if (pt.size() != d || d == 0) throw DataError(where + ": point has " + std::to_string(pt.size()) + " coordinates, expected " + std::to_string(d));
      for (const auto& v : pt) {
        if (!v.is_number() || !std::isfinite(v.get<double>())) throw DataError(where + ": non-numeric coordinate");
        coords.push_back(v.get<double>());
      }
    }
  }
  data.dimension = d ? d : 2;
  return data;
}

json group_to_json(const GroupParams& g) {
  json means = json::array(), vars = json::array();
  for (const auto& c : g.components) {
    means.push_back(c.mean);
    vars.push_back(c.var);
  }
  return {{"weight", g.weight}, {"mixing", g.mixing}, {"means", means}, {"variances", vars}};
}

GroupParams group_from_json(const json& j) {
  GroupParams g;
  g.weight = j.at("weight").get<double>();
  g.mixing = j.at("mixing").get<std::vector<double>>();
  const auto means = j.at("means").get<std::vector<std::vector<double>>>();
  const auto vars = j.at("variances").get<std::vector<std::vector<double>>>();
  if (means.size() != g.mixing.size() || vars.size() != g.mixing.size()) {
    throw DataError("group spec: mixing, means and variances lengths differ");
  }
  for (std::size_t k = 0; k < means.size(); ++k) g.components.push_back({means[k], vars[k]});
  return g;
}

json theta_to_json(const HierParams& theta) {
  json groups = json::array();
  for (const auto& g : theta.groups) groups.push_back(group_to_json(g));
  return groups;
}

HierParams theta_from_json(const json& groups) {
  HierParams theta;
  for (const auto& g : groups) theta.groups.push_back(group_from_json(g));
  return theta;
}

json hyper_json(const Hyperparameters& h) {
  return {{"delta_weight", h.delta_weight}, {"delta_mixing", h.delta_mixing},
          {"g_min", h.g_min}, {"g_max", h.g_max}, {"k_min", h.k_min}, {"k_max", h.k_max},
          {"mu0", h.mu0}, {"tau2", h.tau2}, {"alpha0", h.alpha0}, {"beta0", h.beta0},
          {"source", h.source}};
}

Hyperparameters hyper_from(const json& j, Hyperparameters h) {
  auto num = [&](const char* key, double& dst) {
    if (j.contains(key)) dst = j.at(key).get<double>();
  };
  auto integer = [&](const char* key, int& dst) {
    if (j.contains(key)) dst = j.at(key).get<int>();
  };
  auto vec = [&](const char* key, std::vector<double>& dst) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (v.is_number()) {
      dst.assign(std::max<std::size_t>(dst.size(), 1), v.get<double>());
    } else {
      dst = v.get<std::vector<double>>();
    }
  };
  num("delta_weight", h.delta_weight);
  num("delta_mixing", h.delta_mixing);
  integer("g_min", h.g_min);
  integer("g_max", h.g_max);
  integer("k_min", h.k_min);
  integer("k_max", h.k_max);
  vec("mu0", h.mu0);
  vec("tau2", h.tau2);
  num("alpha0", h.alpha0);
  num("beta0", h.beta0);
  h.source = j.contains("source") ? j.at("source").get<std::string>() : "file";
  return h;
}

json config_json(const SamplerConfig& c) {
  return {{"iterations", c.iterations}, {"burn_in", c.burn_in}, {"thin", c.thin},
          {"monitor_every", c.monitor_every}, {"seed", c.seed}, {"g_split", c.g_split},
          {"g_merge", c.g_merge}, {"k_split", c.k_split}, {"k_merge", c.k_merge},
          {"proposal_scale", c.proposal_scale}, {"enumeration_cap", c.enumeration_cap},
          {"verify", c.verify}, {"initial_groups", c.initial_groups},
          {"initial_components", c.initial_components}};
}

SamplerConfig config_from(const json& j) {
  SamplerConfig c;
  c.iterations = j.at("iterations").get<std::size_t>();
  c.burn_in = j.at("burn_in").get<std::size_t>();
  c.thin = j.at("thin").get<std::size_t>();
  c.monitor_every = j.at("monitor_every").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.g_split = j.at("g_split").get<double>();
  c.g_merge = j.at("g_merge").get<double>();
  c.k_split = j.at("k_split").get<double>();
  c.k_merge = j.at("k_merge").get<double>();
  c.proposal_scale = j.at("proposal_scale").get<double>();
  c.enumeration_cap = j.at("enumeration_cap").get<std::size_t>();
  c.verify = j.at("verify").get<bool>();
  c.initial_groups = j.at("initial_groups").get<int>();
  c.initial_components = j.at("initial_components").get<int>();
  return c;
}

json stats_json(const MoveStats& s) {
  json out = json::object();
  for (std::size_t m = 0; m < kMoveNames.size(); ++m) {
    out[kMoveNames[m]] = {{"proposed", s.proposed[m]}, {"accepted", s.accepted[m]}, {"blocked", s.blocked[m]}};
  }
  return out;
}

MoveStats stats_from(const json& j) {
  MoveStats s;
  for (std::size_t m = 0; m < kMoveNames.size(); ++m) {
    const json& e = j.at(kMoveNames[m]);
    s.proposed[m] = e.at("proposed").get<std::uint64_t>();
    s.accepted[m] = e.at("accepted").get<std::uint64_t>();
    s.blocked[m] = e.at("blocked").get<std::uint64_t>();
  }
  return s;
}

}  // namespace

DataFormat parse_format(const std::string& name) {
  if (name.empty() || name == "auto") return DataFormat::Auto;
  if (name == "csv") return DataFormat::Csv;
  if (name == "json") return DataFormat::Json;
  throw std::invalid_argument("unknown format '" + name + "' (expected csv, json or auto)");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

Dataset load_dataset(const fs::path& path, DataFormat format) {
  const std::string text = read_file(path);
  Dataset data = resolve(path, format) == DataFormat::Json ? load_json_dataset(text) : load_csv(text);
  return data;
}

void save_dataset(const Dataset& data, const fs::path& path, DataFormat format) {
  if (resolve(path, format) == DataFormat::Json) {
    json list = json::array();
    for (std::size_t i = 0; i < data.num_objects(); ++i) {
      json pts = json::array();
      for (std::size_t j = 0; j < data.num_points(i); ++j) {
        const Point x = data.point(i, j);
        pts.push_back(std::vector<double>(x.begin(), x.end()));
      }
      list.push_back({{"id", data.objects[i].id}, {"points", pts}});
    }
    write_atomic(path, list.dump(1) + "\n");
    return;
  }
  std::ostringstream out;
  out << "# hiermix dataset v1\nobject_id";
  for (std::size_t b = 0; b < data.dimension; ++b) out << ",x" << b + 1;
  out << "\n";
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    const std::string id = csv_escape(data.objects[i].id);
    for (std::size_t j = 0; j < data.num_points(i); ++j) {
      out << id;
      for (double v : data.point(i, j)) out << "," << format_double(v);
      out << "\n";
    }
  }
  write_atomic(path, out.str());
}

const Standardization& standardize(Dataset& data) {
  const std::size_t d = data.dimension;
  const std::size_t total = data.total_points();
  if (total < 2) throw DataError("standardize: need at least two points");
  Standardization st;
  st.center.assign(d, 0.0);
  st.scale.assign(d, 0.0);
  for (const auto& obj : data.objects) {
    for (std::size_t p = 0; p < obj.coords.size(); ++p) st.center[p % d] += obj.coords[p];
  }
  for (double& c : st.center) c /= static_cast<double>(total);
  for (const auto& obj : data.objects) {
    for (std::size_t p = 0; p < obj.coords.size(); ++p) {
      const double r = obj.coords[p] - st.center[p % d];
      st.scale[p % d] += r * r;
    }
  }
  for (double& s : st.scale) {
    s = std::sqrt(s / static_cast<double>(total));
    if (!(s > 0.0)) s = 1.0;
  }
  for (auto& obj : data.objects) {
    for (std::size_t p = 0; p < obj.coords.size(); ++p) {
      obj.coords[p] = (obj.coords[p] - st.center[p % d]) / st.scale[p % d];
    }
  }
  data.standardization = std::move(st);
  return *data.standardization;
}

HierParams destandardize(const HierParams& theta, const Standardization& st) {
  HierParams out = theta;
  for (auto& g : out.groups) {
    for (auto& c : g.components) {
      for (std::size_t b = 0; b < c.mean.size(); ++b) {
        c.mean[b] = st.center[b] + st.scale[b] * c.mean[b];
        c.var[b] *= st.scale[b] * st.scale[b];
      }
    }
  }
  return out;
}

std::string params_to_json(const HierParams& theta) {
  return json{{"groups", theta_to_json(theta)}}.dump(2) + "\n";
}

HierParams params_from_json(const std::string& text) {
  HierParams theta;
  try {
    const json doc = json::parse(text);
    theta = theta_from_json(doc.is_array() ? doc : doc.at("groups"));
  } catch (const json::exception& e) {
    throw DataError(std::string("parameter spec: ") + e.what());
  }
  if (!renormalize(theta)) throw DataError("parameter spec: weights or mixing probabilities do not sum to 1 (tolerance 1e-9)");
  const ValidationReport rep = validate(theta);
  if (!rep.ok()) throw DataError("parameter spec violates constraints: " + rep.summary());
  return theta;
}

HierParams load_params(const fs::path& path) { return params_from_json(read_file(path)); }

void save_params(const HierParams& theta, const fs::path& path) { write_atomic(path, params_to_json(theta)); }

std::string hyperparameters_to_json(const Hyperparameters& h) { return hyper_json(h).dump(2) + "\n"; }

Hyperparameters hyperparameters_from_json(const std::string& text, const Hyperparameters& base) {
  Hyperparameters h;
  try {
    h = hyper_from(json::parse(text), base);
  } catch (const json::exception& e) {
    throw DataError(std::string("hyperparameter file: ") + e.what());
  }
  try {
    h.check();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return h;
}

Hyperparameters load_hyperparameters(const fs::path& path, const Dataset& data) {
  Hyperparameters h = hyperparameters_from_json(read_file(path), default_hyperparameters(data));
  if (h.dimension() != data.dimension) throw DataError("hyperparameter file: mu0 has the wrong dimension");
  return h;
}

PointLaw parse_point_law(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("point law must be 'fixed:N' or 'poisson:M'");
  PointLaw law;
  const std::string kind = text.substr(0, colon);
  const std::string value = text.substr(colon + 1);
  if (kind == "fixed") {
    law.kind = PointLaw::Kind::Fixed;
  } else if (kind == "poisson") {
    law.kind = PointLaw::Kind::Poisson;
  } else {
    throw std::invalid_argument("point law must be 'fixed:N' or 'poisson:M'");
  }
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !(v > 0.0)) {
    throw std::invalid_argument("point law value must be a positive number");
  }
  if (law.kind == PointLaw::Kind::Fixed && v != std::floor(v)) throw std::invalid_argument("fixed point count must be an integer");
  law.value = v;
  return law;
}

Simulation simulate_population(const HierParams& theta, std::size_t n_objects, const PointLaw& law,
                               Rng& rng) {
  const ValidationReport rep = validate(theta);
  if (!rep.ok()) throw DataError("simulate: " + rep.summary());
  const std::size_t d = theta.dimension();
  Simulation sim;
  sim.data.dimension = d;
  sim.truth.group.resize(n_objects);
  sim.truth.component.resize(n_objects);
  auto pick = [&](const std::vector<double>& probs) {
    double u = uniform01(rng);
    std::size_t k = 0;
    for (; k + 1 < probs.size(); ++k) {
      u -= probs[k];
      if (u <= 0.0) break;
    }
    return k;
  };
  std::vector<double> weights;
  for (const auto& g : theta.groups) weights.push_back(g.weight);
  for (std::size_t i = 0; i < n_objects; ++i) {
    const std::size_t g = pick(weights);
    const GroupParams& group = theta.groups[g];
    std::size_t n = 0;
    if (law.kind == PointLaw::Kind::Fixed) {
      n = static_cast<std::size_t>(law.value);
    } else {
      do {
        n = poisson_draw(law.value, rng);
      } while (n == 0);
    }
    ObjectObservations obj;
    obj.id = "obj" + std::to_string(i + 1);
    sim.truth.group[i] = static_cast<int>(g);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t k = pick(group.mixing);
      sim.truth.component[i].push_back(static_cast<int>(k));
      const ComponentParams& c = group.components[k];
      for (std::size_t b = 0; b < d; ++b) obj.coords.push_back(c.mean[b] + std::sqrt(c.var[b]) * standard_normal(rng));
    }
    sim.data.objects.push_back(std::move(obj));
  }
  return sim;
}

void save_labels(const Dataset& data, const Labels& labels, const fs::path& path) {
  std::ostringstream out;
  out << "object_id,point,group,component\n";
  for (std::size_t i = 0; i < data.num_objects(); ++i) {
    const std::string id = csv_escape(data.objects[i].id);
    if (labels.component[i].empty()) out << id << ",0," << labels.group[i] + 1 << ",0\n";
    for (std::size_t j = 0; j < labels.component[i].size(); ++j) {
      out << id << "," << j + 1 << "," << labels.group[i] + 1 << "," << labels.component[i][j] + 1 << "\n";
    }
  }
  write_atomic(path, out.str());
}

std::string sampler_config_to_json(const SamplerConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

void save_trace(const ChainTrace& trace, const fs::path& path) {
  std::ostringstream out;
  // Record counts live in the header so a header-only file is a valid empty
  // trace and any truncation is detectable.
  json header = {{"type", "header"}, {"format", "hiermix-trace"}, {"version", kTraceVersion},
                 {"seed", trace.seed}, {"chain", trace.chain}, {"config", config_json(trace.config)},
                 {"hyper", hyper_json(trace.hyper)}, {"samples", trace.samples.size()},
                 {"monitor", trace.monitor.size()}, {"stats", stats_json(trace.stats)}};
  if (trace.standardization) {
    header["standardization"] = {{"center", trace.standardization->center}, {"scale", trace.standardization->scale}};
  } else {
    header["standardization"] = nullptr;
  }
  out << header.dump() << "\n";
  for (const auto& s : trace.samples) {
    json rec = {{"type", "sample"}, {"iteration", s.iteration}, {"log_likelihood", s.log_likelihood},
                {"log_posterior", s.log_posterior}, {"G", s.theta.num_groups()},
                {"K", s.theta.component_counts()}, {"groups", theta_to_json(s.theta)}};
    out << rec.dump() << "\n";
  }
  for (const auto& m : trace.monitor) {
    out << json{{"type", "monitor"}, {"iteration", m.iteration}, {"log_likelihood", m.log_likelihood}, {"K", m.k}}.dump() << "\n";
  }
  write_atomic(path, out.str());
}

ChainTrace load_trace(const fs::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  ChainTrace trace;
  bool have_header = false;
  std::size_t want_samples = 0, want_monitor = 0;
  std::string last_good = "none";
  auto fail = [&](const std::string& msg) {
    throw DataError(path.string() + " line " + std::to_string(lineno) + ": " + msg + " (last good record: " + last_good + ")");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      fail("corrupt record");
    }
    try {
      const std::string type = rec.at("type").get<std::string>();
      if (!have_header) {
        if (type != "header" || rec.value("format", "") != "hiermix-trace") fail("missing trace header");
        const int version = rec.at("version").get<int>();
        if (version != kTraceVersion) fail("unsupported trace version " + std::to_string(version));
        trace.seed = rec.at("seed").get<std::uint64_t>();
        trace.chain = rec.at("chain").get<std::size_t>();
        trace.config = config_from(rec.at("config"));
        trace.hyper = hyper_from(rec.at("hyper"), Hyperparameters{});
        trace.hyper.source = rec.at("hyper").value("source", "file");
        trace.stats = stats_from(rec.at("stats"));
        want_samples = rec.at("samples").get<std::size_t>();
        want_monitor = rec.at("monitor").get<std::size_t>();
        const json& st = rec.at("standardization");
        if (!st.is_null()) {
          trace.standardization = Standardization{st.at("center").get<std::vector<double>>(),
                                                  st.at("scale").get<std::vector<double>>()};
        }
        have_header = true;
        last_good = "header";
      } else if (type == "sample") {
        if (!trace.monitor.empty()) fail("sample after monitor records");
        TraceSample s;
        s.iteration = rec.at("iteration").get<std::size_t>();
        s.log_likelihood = rec.at("log_likelihood").get<double>();
        s.log_posterior = rec.at("log_posterior").get<double>();
        s.theta = theta_from_json(rec.at("groups"));
        const ValidationReport rep = validate(s.theta);
        if (!rep.ok()) fail("invalid sample: " + rep.summary());
        if (!trace.samples.empty() && s.iteration <= trace.samples.back().iteration) fail("sample iterations not increasing");
        trace.samples.push_back(std::move(s));
        last_good = "sample at iteration " + std::to_string(trace.samples.back().iteration);
      } else if (type == "monitor") {
        MonitorRecord m;
        m.iteration = rec.at("iteration").get<std::size_t>();
        m.log_likelihood = rec.at("log_likelihood").get<double>();
        m.k = rec.at("K").get<std::vector<int>>();
        trace.monitor.push_back(std::move(m));
        last_good = "monitor at iteration " + std::to_string(trace.monitor.back().iteration);
      } else {
        fail("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      fail(std::string("malformed record: ") + e.what());
    }
  }
  if (!have_header) throw DataError(path.string() + ": empty trace file");
  if (trace.samples.size() > want_samples || trace.monitor.size() > want_monitor) {
    throw DataError(path.string() + ": more records than the header declares");
  }
  if (trace.samples.size() != want_samples || trace.monitor.size() != want_monitor) {
    throw DataError(path.string() + ": truncated trace, expected " + std::to_string(want_samples) + " samples and " +
                    std::to_string(want_monitor) + " monitor records (last good record: " + last_good + ")");
  }
  return trace;
}

}  // namespace hiermix
