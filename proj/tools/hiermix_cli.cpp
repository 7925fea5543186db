// Command-line front end; talks to the library only through the C API.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hiermix/hiermix.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit : int { kOk = 0, kNotConverged = 1, kUsage = 2, kData = 3, kNumerical = 4 };

int exit_code(hmx_status s) {
  switch (s) {
    case HMX_OK: return kOk;
    case HMX_ERR_ARGUMENT: return kUsage;
    case HMX_ERR_DATA:
    case HMX_ERR_IO: return kData;
    default: return kNumerical;
  }
}

struct Failure {
  hmx_status status;
  std::string message;
};

void check(hmx_status s, const std::string& context) {
  if (s != HMX_OK) throw Failure{s, context + ": " + hmx_last_error()};
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    std::swap(ptr, o.ptr);
    return *this;
  }
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Dataset = Handle<hmx_dataset, hmx_dataset_free>;
using Params = Handle<hmx_params, hmx_params_free>;
using Hyper = Handle<hmx_hyper, hmx_hyper_free>;
using Trace = Handle<hmx_trace, hmx_trace_free>;

json owned_json(char* text) {
  json j = json::parse(text);
  hmx_string_free(text);
  return j;
}

void write_text(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Failure{HMX_ERR_IO, "cannot write " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Failure{HMX_ERR_IO, "cannot write " + path.string()};
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{HMX_ERR_IO, "cannot create " + dir.string() + ": " + ec.message()};
}

void write_config(const fs::path& dir, const std::string& command, json body) {
  body["command"] = command;
  body["library_version"] = hmx_version();
  write_text(dir / "config.json", body.dump(2) + "\n");
}

const char* kMoveLabels[] = {"g_split", "g_merge", "k_split", "k_merge"};

// ---- fit --------------------------------------------------------------------

struct FitOptions {
  std::string data, format = "auto", hyper_file, out = "hiermix-out";
  std::size_t chains = 3, parallel = 0, n_objects = SIZE_MAX, dimension = 2;
  hmx_sampler_config sampler{};
  int g_min = 0, g_max = 0, k_min = 0, k_max = 0;
  bool prior_only = false, standardize = false, quiet = false, warn_only = false;
  bool include_burnin = false;
  hmx_diag_options diag{};
};

struct ProgressState {
  std::mutex mu;
  std::size_t total = 0;
  std::size_t step = 1;
  bool quiet = false;
};

int progress_cb(size_t chain, size_t iteration, double ll, size_t groups, void* user) {
  auto* st = static_cast<ProgressState*>(user);
  if (st->quiet || iteration % st->step != 0) return 0;
  std::lock_guard<std::mutex> lock(st->mu);
  std::fprintf(stderr, "chain %zu: iteration %zu/%zu  log-lik %.4f  G=%zu\n", chain, iteration, st->total, ll, groups);
  return 0;
}

Dataset load_data(const std::string& path, const std::string& format) {
  Dataset d;
  check(hmx_dataset_load(path.c_str(), format.c_str(), d.out()), "loading " + path);
  return d;
}

int cmd_fit(const FitOptions& o) {
  if (!o.prior_only && o.data.empty()) throw Failure{HMX_ERR_ARGUMENT, "fit: --data is required unless --prior-only is given"};
  if (o.prior_only && !o.data.empty()) throw Failure{HMX_ERR_ARGUMENT, "fit: --prior-only ignores data; drop --data"};
  if (o.prior_only && o.n_objects != SIZE_MAX && o.n_objects != 0) {
    throw Failure{HMX_ERR_ARGUMENT, "fit: --prior-only requires --n-objects 0"};
  }
  if (o.chains == 0) throw Failure{HMX_ERR_ARGUMENT, "fit: --chains must be positive"};

  Dataset data;
  if (o.prior_only) {
    check(hmx_dataset_empty(o.dimension, data.out()), "creating empty dataset");
  } else {
    data = load_data(o.data, o.format);
    if (o.n_objects != SIZE_MAX && o.n_objects < hmx_dataset_num_objects(data.get())) {
      throw Failure{HMX_ERR_ARGUMENT, "fit: --n-objects below the dataset size is only supported with --prior-only (0)"};
    }
    if (o.standardize) check(hmx_dataset_standardize(data.get()), "standardizing data");
  }
  Hyper hyper;
  if (o.hyper_file.empty()) {
    check(hmx_hyper_default(data.get(), hyper.out()), "default hyperparameters");
  } else {
    check(hmx_hyper_load(o.hyper_file.c_str(), data.get(), hyper.out()), "loading " + o.hyper_file);
  }
  if (o.g_min || o.g_max || o.k_min || o.k_max) {
    json h = owned_json([&] {
      char* s = nullptr;
      check(hmx_hyper_to_json(hyper.get(), &s), "hyperparameters");
      return s;
    }());
    check(hmx_hyper_set_bounds(hyper.get(), o.g_min ? o.g_min : h["g_min"].get<int>(),
                               o.g_max ? o.g_max : h["g_max"].get<int>(), o.k_min ? o.k_min : h["k_min"].get<int>(),
                               o.k_max ? o.k_max : h["k_max"].get<int>()),
          "model-size bounds");
  }

  const fs::path out(o.out);
  ensure_dir(out);
  char* hyper_text = nullptr;
  check(hmx_hyper_to_json(hyper.get(), &hyper_text), "hyperparameters");
  const json hyper_json = owned_json(hyper_text);
  char* sampler_text = nullptr;
  check(hmx_sampler_config_to_json(&o.sampler, &sampler_text), "sampler configuration");
  json diag_json = {{"checkpoint_every", o.diag.checkpoint_every}, {"window", o.diag.window}, {"tol", o.diag.tol},
                    {"groups_only", o.diag.groups_only != 0}, {"include_burnin", o.include_burnin}};
  write_config(out, "fit",
               {{"data", o.prior_only ? json(nullptr) : json(o.data)}, {"format", o.format},
                {"prior_only", o.prior_only}, {"dimension", hmx_dataset_dimension(data.get())},
                {"objects", hmx_dataset_num_objects(data.get())}, {"standardize", o.standardize},
                {"hyperparameter_file", o.hyper_file.empty() ? json(nullptr) : json(o.hyper_file)},
                {"hyperparameters", hyper_json}, {"sampler", owned_json(sampler_text)}, {"chains", o.chains},
                {"parallel", o.parallel ? o.parallel : o.chains}, {"diagnostics", diag_json},
                {"warn_only", o.warn_only}});

  ProgressState progress;
  progress.total = o.sampler.iterations;
  progress.step = std::max<std::size_t>(o.sampler.iterations / 10, 1);
  progress.quiet = o.quiet;

  std::vector<Trace> traces(o.chains);
  std::vector<hmx_status> status(o.chains, HMX_OK);
  std::vector<std::string> errors(o.chains);
  std::atomic<std::size_t> next{0};
  const std::size_t workers = std::min(o.parallel ? o.parallel : o.chains, o.chains);
  auto worker = [&] {
    for (std::size_t c = next++; c < o.chains; c = next++) {
      status[c] = hmx_run_chain(data.get(), hyper.get(), &o.sampler, c, progress_cb, &progress, traces[c].out());
      if (status[c] != HMX_OK) errors[c] = hmx_last_error();
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (std::size_t c = 0; c < o.chains; ++c) {
    if (status[c] != HMX_OK) throw Failure{status[c], "chain " + std::to_string(c) + ": " + errors[c]};
  }

  std::vector<const hmx_trace*> raw;
  for (std::size_t c = 0; c < o.chains; ++c) {
    const fs::path path = out / ("chain" + std::to_string(c + 1) + ".trace.jsonl");
    check(hmx_trace_save(traces[c].get(), path.string().c_str()), "writing " + path.string());
    raw.push_back(traces[c].get());
    std::printf("chain %zu: %zu samples -> %s\n", c + 1, hmx_trace_num_samples(traces[c].get()), path.c_str());
    for (int m = 0; m < 4; ++m) {
      uint64_t p = 0, a = 0, b = 0;
      check(hmx_trace_move_stats(traces[c].get(), m, &p, &a, &b), "move statistics");
      std::printf("  %-8s proposed %llu accepted %llu (%.3f) blocked %llu\n", kMoveLabels[m],
                  static_cast<unsigned long long>(p), static_cast<unsigned long long>(a),
                  p ? static_cast<double>(a) / static_cast<double>(p) : 0.0, static_cast<unsigned long long>(b));
    }
  }
  if (o.chains < 2) {
    std::printf("diagnostics skipped: they need at least two chains\n");
    return kOk;
  }
  hmx_diag_options diag = o.diag;
  diag.first_iteration = o.include_burnin ? 0 : o.sampler.burn_in;
  hmx_diag_result res{};
  const std::string prefix = (out / "diagnostics").string();
  check(hmx_diagnose(raw.data(), raw.size(), &diag, prefix.c_str(), &res), "diagnostics");
  const json report = {{"converged", res.converged != 0}, {"checkpoints", res.checkpoints},
                       {"checkpoint_every", res.checkpoint_every}, {"ratio_chain", res.ratio_chain},
                       {"ratio_model", res.ratio_model}, {"ratio_between", res.ratio_between},
                       {"reason", res.reason}, {"first_iteration", diag.first_iteration}};
  write_text(out / "convergence.json", report.dump(2) + "\n");
  if (res.checkpoint_every != o.diag.checkpoint_every) {
    std::printf("note: checkpoint spacing reduced to %zu to give %zu checkpoints\n", res.checkpoint_every, diag.window);
  }
  std::printf("convergence: %s (%zu checkpoints; W_c/V %.4f, W_mW_c/W_m %.4f, B_mW_c/B_m %.4f)%s%s\n",
              res.converged ? "yes" : "no", res.checkpoints, res.ratio_chain, res.ratio_model, res.ratio_between,
              res.reason[0] ? " - " : "", res.reason);
  if (!res.converged && !o.warn_only) return kNotConverged;
  return kOk;
}

// ---- prc --------------------------------------------------------------------

struct PrcOptions {
  std::vector<std::string> traces;
  std::string queries_file, out = "hiermix-prc";
  int w = -1, m = -1, n = -1;
  double r0 = 15.0, level = 0.95, threshold = 0.003;
  unsigned threads = 0;
};

unsigned parse_count(const std::string& s, const std::string& where) {
  std::size_t pos = 0;
  long v = -1;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v < 0) throw Failure{HMX_ERR_DATA, where + ": '" + s + "' is not a non-negative integer"};
  return static_cast<unsigned>(v);
}

std::vector<hmx_prc_query> read_queries(const std::string& path, double r0) {
  std::ifstream in(path);
  if (!in) throw Failure{HMX_ERR_IO, "cannot open " + path};
  std::vector<hmx_prc_query> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      cell.erase(0, cell.find_first_not_of(" \t"));
      cell.erase(cell.find_last_not_of(" \t") + 1);
      f.push_back(cell);
    }
    if (!f.empty() && f[0] == "w") continue;  // header
    const std::string where = path + " line " + std::to_string(lineno);
    if (f.size() != 3 && f.size() != 4) throw Failure{HMX_ERR_DATA, where + ": expected w,m,n[,r0]"};
    hmx_prc_query q{parse_count(f[0], where), parse_count(f[1], where), parse_count(f[2], where), r0};
    if (f.size() == 4) {
      try {
        q.r0 = std::stod(f[3]);
      } catch (const std::exception&) {
        throw Failure{HMX_ERR_DATA, where + ": bad r0 '" + f[3] + "'"};
      }
    }
    out.push_back(q);
  }
  if (out.empty()) throw Failure{HMX_ERR_DATA, path + ": no queries"};
  return out;
}

std::vector<Trace> load_traces(const std::vector<std::string>& paths) {
  std::vector<Trace> traces;
  for (const auto& p : paths) {
    Trace t;
    check(hmx_trace_load(p.c_str(), t.out()), "loading " + p);
    traces.push_back(std::move(t));
  }
  return traces;
}

int cmd_prc(const PrcOptions& o) {
  std::vector<hmx_prc_query> queries;
  if (!o.queries_file.empty()) {
    if (o.w >= 0 || o.m >= 0 || o.n >= 0) throw Failure{HMX_ERR_ARGUMENT, "prc: give either --queries or --w/--m/--n"};
    queries = read_queries(o.queries_file, o.r0);
  } else {
    if (o.w < 0 || o.m < 0 || o.n < 0) throw Failure{HMX_ERR_ARGUMENT, "prc: --w, --m and --n are required without --queries"};
    queries.push_back({static_cast<unsigned>(o.w), static_cast<unsigned>(o.m), static_cast<unsigned>(o.n), o.r0});
  }
  const std::vector<Trace> traces = load_traces(o.traces);
  std::vector<const hmx_trace*> raw;
  for (const auto& t : traces) raw.push_back(t.get());
  const fs::path out(o.out);
  ensure_dir(out);
  json qj = json::array();
  for (const auto& q : queries) qj.push_back({{"w", q.w}, {"m", q.m}, {"n", q.n}, {"r0", q.r0}});
  write_config(out, "prc",
               {{"traces", o.traces}, {"queries", qj}, {"level", o.level}, {"threshold", o.threshold},
                {"threads", o.threads}});
  std::vector<hmx_prc_result> results(queries.size());
  const std::string prefix = (out / "prc").string();
  check(hmx_prc_posterior(raw.data(), raw.size(), queries.data(), queries.size(), o.level, o.threads, o.threshold,
                          prefix.c_str(), results.data()),
        "posterior PRC");
  std::printf("w,m,n,r0,mean,hpd_lo,hpd_hi,below_threshold\n");
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::printf("%u,%u,%u,%g,%.6g,%.6g,%.6g,%d\n", queries[q].w, queries[q].m, queries[q].n, queries[q].r0,
                results[q].mean, results[q].hpd_lo, results[q].hpd_hi, results[q].below_threshold);
  }
  std::printf("pooled samples: %zu; report: %s.csv\n", results.empty() ? 0 : results[0].samples, prefix.c_str());
  return kOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::string params, out_data, out_labels, points = "poisson:60", format = "auto";
  std::size_t n_objects = 100;
  uint64_t seed = 0;
};

int cmd_simulate(const SimulateOptions& o) {
  Params params;
  check(hmx_params_load(o.params.c_str(), params.out()), "parameter spec " + o.params);
  const fs::path data_path(o.out_data);
  fs::path labels_path = o.out_labels.empty()
                             ? data_path.parent_path() / (data_path.stem().string() + "_labels.csv")
                             : fs::path(o.out_labels);
  const fs::path dir = data_path.has_parent_path() ? data_path.parent_path() : fs::path(".");
  ensure_dir(dir);
  Dataset data;
  check(hmx_simulate(params.get(), o.n_objects, o.points.c_str(), o.seed, labels_path.string().c_str(), data.out()),
        "simulation");
  check(hmx_dataset_save(data.get(), o.out_data.c_str(), o.format.c_str()), "writing " + o.out_data);
  char* ptext = nullptr;
  check(hmx_params_to_json(params.get(), &ptext), "parameters");
  write_config(dir, "simulate",
               {{"params", o.params}, {"parameters", owned_json(ptext)}, {"n_objects", o.n_objects},
                {"points", o.points}, {"seed", o.seed}, {"data", o.out_data}, {"labels", labels_path.string()},
                {"format", o.format}});
  std::printf("%zu objects, %zu points -> %s (labels %s)\n", hmx_dataset_num_objects(data.get()),
              hmx_dataset_total_points(data.get()), o.out_data.c_str(), labels_path.c_str());
  return kOk;
}

// ---- select-cov -------------------------------------------------------------

struct SelectOptions {
  std::string data, format = "auto", out = "hiermix-bic";
  int k_min = 1, k_max = 10, restarts = 10;
  uint64_t seed = 1;
};

int cmd_select(const SelectOptions& o) {
  Dataset data = load_data(o.data, o.format);
  const fs::path out(o.out);
  ensure_dir(out);
  write_config(out, "select-cov",
               {{"data", o.data}, {"format", o.format}, {"k_min", o.k_min}, {"k_max", o.k_max},
                {"restarts", o.restarts}, {"seed", o.seed}});
  hmx_cov_summary s{};
  const std::string prefix = (out / "bic").string();
  check(hmx_select_cov(data.get(), o.k_min, o.k_max, o.seed, o.restarts, prefix.c_str(), &s), "covariance selection");
  const char* names[] = {"diagonal-tied", "diagonal-free", "full-tied", "full-free"};
  const std::size_t used = s.objects - s.skipped;
  std::printf("objects: %zu (skipped %zu)\n", s.objects, s.skipped);
  for (int k = 0; k < 4; ++k) {
    std::printf("  %-14s %zu (%.2f%%)\n", names[k], s.wins[k],
                used ? 100.0 * static_cast<double>(s.wins[k]) / static_cast<double>(used) : 0.0);
  }
  if (s.skipped) std::fprintf(stderr, "warning: %zu objects had too few points and were skipped\n", s.skipped);
  std::printf("report: %s_objects.csv, %s_aggregate.csv\n", prefix.c_str(), prefix.c_str());
  return kOk;
}

// ---- diagnose ----------------------------------------------------------------

struct DiagnoseOptions {
  std::vector<std::string> traces;
  std::string out = "hiermix-diag";
  hmx_diag_options diag{};
  bool include_burnin = false, warn_only = false;
};

int cmd_diagnose(const DiagnoseOptions& o) {
  const std::vector<Trace> traces = load_traces(o.traces);
  std::vector<const hmx_trace*> raw;
  std::size_t burn_in = 0;
  for (const auto& t : traces) {
    raw.push_back(t.get());
    burn_in = std::max(burn_in, hmx_trace_burn_in(t.get()));
  }
  hmx_diag_options diag = o.diag;
  diag.first_iteration = o.include_burnin ? 0 : burn_in;
  const fs::path out(o.out);
  ensure_dir(out);
  write_config(out, "diagnose",
               {{"traces", o.traces}, {"checkpoint_every", diag.checkpoint_every}, {"window", diag.window},
                {"tol", diag.tol}, {"groups_only", diag.groups_only != 0}, {"first_iteration", diag.first_iteration}});
  hmx_diag_result res{};
  const std::string prefix = (out / "diagnostics").string();
  check(hmx_diagnose(raw.data(), raw.size(), &diag, prefix.c_str(), &res), "diagnostics");
  if (res.checkpoint_every != o.diag.checkpoint_every) {
    std::printf("note: checkpoint spacing reduced to %zu to give %zu checkpoints\n", res.checkpoint_every, diag.window);
  }
  std::printf("convergence: %s (%zu checkpoints; W_c/V %.4f, W_mW_c/W_m %.4f, B_mW_c/B_m %.4f)%s%s\n",
              res.converged ? "yes" : "no", res.checkpoints, res.ratio_chain, res.ratio_model, res.ratio_between,
              res.reason[0] ? " - " : "", res.reason);
  if (!res.converged && !o.warn_only) return kNotConverged;
  return kOk;
}

void add_diag_flags(CLI::App* app, hmx_diag_options& d, bool& include_burnin, bool& warn_only) {
  app->add_option("--checkpoint-every", d.checkpoint_every, "Iterations between diagnostic checkpoints")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app->add_option("--window", d.window, "Trailing checkpoints that must agree")->capture_default_str();
  app->add_option("--tol", d.tol, "Relative tolerance for merged curves")->capture_default_str();
  app->add_flag("--groups-only", d.groups_only, "Group draws by G instead of the full model");
  app->add_flag("--include-burnin", include_burnin, "Use monitor records from the burn-in period");
  app->add_flag("--warn-only", warn_only, "Exit 0 even when the chains have not converged");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical Gaussian mixture sampler and fingerprint match probabilities"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(hmx_version()));

  FitOptions fit;
  hmx_sampler_config_default(&fit.sampler);
  hmx_diag_options_default(&fit.diag);
  auto* f = app.add_subcommand("fit", "Run reversible-jump chains and check convergence");
  f->add_option("--data", fit.data, "Dataset file (CSV or JSON)");
  f->add_option("--format", fit.format, "csv, json or auto")->capture_default_str();
  f->add_option("--hyper", fit.hyper_file, "Hyperparameter JSON; missing keys use data-driven defaults");
  f->add_option("--out", fit.out, "Output directory")->capture_default_str();
  f->add_option("--chains", fit.chains, "Number of chains")->capture_default_str();
  f->add_option("--parallel", fit.parallel, "Concurrent chains (default: all)");
  f->add_option("--iters", fit.sampler.iterations, "Sweeps per chain")->capture_default_str();
  f->add_option("--burnin", fit.sampler.burn_in, "Sweeps discarded before retaining samples")->capture_default_str();
  f->add_option("--thin", fit.sampler.thin, "Keep every thin-th sweep after burn-in")->capture_default_str();
  f->add_option("--monitor-every", fit.sampler.monitor_every, "Monitor spacing (0: thin)")->capture_default_str();
  f->add_option("--seed", fit.sampler.seed, "Random seed")->required();
  f->add_option("--g-min", fit.g_min, "Smallest number of groups");
  f->add_option("--g-max", fit.g_max, "Largest number of groups");
  f->add_option("--k-min", fit.k_min, "Smallest number of components per group");
  f->add_option("--k-max", fit.k_max, "Largest number of components per group");
  f->add_option("--g-split", fit.sampler.g_split, "Group split probability")->capture_default_str();
  f->add_option("--g-merge", fit.sampler.g_merge, "Group merge probability")->capture_default_str();
  f->add_option("--k-split", fit.sampler.k_split, "Component split probability")->capture_default_str();
  f->add_option("--k-merge", fit.sampler.k_merge, "Component merge probability")->capture_default_str();
  f->add_option("--proposal-scale", fit.sampler.proposal_scale, "Group split mean-offset scale")->capture_default_str();
  f->add_option("--initial-groups", fit.sampler.initial_groups, "Groups in the clustering-based start")->capture_default_str();
  f->add_option("--initial-components", fit.sampler.initial_components, "Components per group in the start")->capture_default_str();
  f->add_flag("--prior-only", fit.prior_only, "Sample the prior (no data)");
  f->add_option("--n-objects", fit.n_objects, "Number of objects; must be 0 with --prior-only");
  f->add_option("--dimension", fit.dimension, "Dimension for --prior-only runs")->capture_default_str();
  f->add_flag("--standardize", fit.standardize, "Centre and scale coordinates; PRC queries stay in original units");
  f->add_flag("--verify", fit.sampler.verify, "Recheck cached densities after every step");
  f->add_flag("--quiet", fit.quiet, "No progress output");
  add_diag_flags(f, fit.diag, fit.include_burnin, fit.warn_only);

  PrcOptions prc;
  auto* p = app.add_subcommand("prc", "Posterior probability of random correspondence");
  p->add_option("--trace", prc.traces, "Trace files to pool")->required();
  p->add_option("--w", prc.w, "Matched minutiae");
  p->add_option("--m", prc.m, "Minutiae on the first print");
  p->add_option("--n", prc.n, "Minutiae on the second print");
  p->add_option("--queries", prc.queries_file, "CSV of w,m,n[,r0] queries");
  p->add_option("--r0", prc.r0, "Match tolerance in original units")->capture_default_str();
  p->add_option("--level", prc.level, "HPD level")->capture_default_str();
  p->add_option("--threshold", prc.threshold, "Flag queries whose HPD upper bound is below this")->capture_default_str();
  p->add_option("--threads", prc.threads, "Worker threads (0: hardware concurrency)")->capture_default_str();
  p->add_option("--out", prc.out, "Output directory")->capture_default_str();

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Draw a synthetic population from a parameter spec");
  s->add_option("--params", sim.params, "Parameter spec JSON")->required();
  s->add_option("--n-objects", sim.n_objects, "Number of objects")->capture_default_str();
  s->add_option("--points", sim.points, "fixed:N or poisson:M")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->required();
  s->add_option("--out", sim.out_data, "Dataset file to write")->required();
  s->add_option("--labels", sim.out_labels, "Ground-truth label CSV (default: <out>_labels.csv)");
  s->add_option("--format", sim.format, "csv, json or auto")->capture_default_str();

  SelectOptions sel;
  auto* c = app.add_subcommand("select-cov", "Rank covariance structures per object by BIC");
  c->add_option("--data", sel.data, "Dataset file")->required();
  c->add_option("--format", sel.format, "csv, json or auto")->capture_default_str();
  c->add_option("--k-min", sel.k_min, "Smallest component count")->capture_default_str();
  c->add_option("--k-max", sel.k_max, "Largest component count")->capture_default_str();
  c->add_option("--restarts", sel.restarts, "EM restarts per fit")->capture_default_str();
  c->add_option("--seed", sel.seed, "Random seed")->capture_default_str();
  c->add_option("--out", sel.out, "Output directory")->capture_default_str();

  DiagnoseOptions dg;
  hmx_diag_options_default(&dg.diag);
  auto* d = app.add_subcommand("diagnose", "Recompute convergence diagnostics from traces");
  d->add_option("--trace", dg.traces, "Trace files, one per chain")->required();
  d->add_option("--out", dg.out, "Output directory")->capture_default_str();
  add_diag_flags(d, dg.diag, dg.include_burnin, dg.warn_only);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (f->parsed()) return cmd_fit(fit);
    if (p->parsed()) return cmd_prc(prc);
    if (s->parsed()) return cmd_simulate(sim);
    if (c->parsed()) return cmd_select(sel);
    if (d->parsed()) return cmd_diagnose(dg);
  } catch (const Failure& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return exit_code(e.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  }
  return kUsage;
}
