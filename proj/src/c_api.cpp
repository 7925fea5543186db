#include "hiermix/hiermix.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <cstring>
#include <exception>
#include <new>
#include <string>
#include <vector>

#include "hiermix/covselect.hpp"
#include "hiermix/diagnostics.hpp"
#include "hiermix/error.hpp"
#include "hiermix/io.hpp"
#include "hiermix/prc.hpp"
#include "hiermix/report.hpp"
#include "hiermix/sampler.hpp"

struct hmx_dataset {
  hiermix::Dataset value;
};
struct hmx_params {
  hiermix::HierParams value;
};
struct hmx_hyper {
  hiermix::Hyperparameters value;
};
struct hmx_trace {
  hiermix::ChainTrace value;
};

namespace {

thread_local std::string g_last_error;

struct Cancelled {};

template <class F>
hmx_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return HMX_OK;
  } catch (const Cancelled&) {
    g_last_error = "cancelled by progress callback";
    return HMX_ERR_CANCELLED;
  } catch (const hiermix::DataError& e) {
    g_last_error = e.what();
    return HMX_ERR_DATA;
  } catch (const hiermix::IoError& e) {
    g_last_error = e.what();
    return HMX_ERR_IO;
  } catch (const hiermix::NumericalError& e) {
    g_last_error = e.what();
    return HMX_ERR_NUMERICAL;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return HMX_ERR_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HMX_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HMX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return HMX_ERR_INTERNAL;
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

hiermix::DataFormat format_of(const char* format) {
  return hiermix::parse_format(format ? format : "");
}

hiermix::SamplerConfig to_core(const hmx_sampler_config& c) {
  hiermix::SamplerConfig out;
  out.iterations = c.iterations;
  out.burn_in = c.burn_in;
  out.thin = c.thin;
  out.monitor_every = c.monitor_every;
  out.seed = c.seed;
  out.g_split = c.g_split;
  out.g_merge = c.g_merge;
  out.k_split = c.k_split;
  out.k_merge = c.k_merge;
  out.proposal_scale = c.proposal_scale;
  out.verify = c.verify != 0;
  out.initial_groups = c.initial_groups;
  out.initial_components = c.initial_components;
  return out;
}

std::vector<const hiermix::ChainTrace*> collect(const hmx_trace* const* traces, size_t n) {
  require(traces != nullptr || n == 0, "traces is null");
  std::vector<const hiermix::ChainTrace*> out;
  for (size_t i = 0; i < n; ++i) {
    require(traces[i] != nullptr, "trace handle is null");
    out.push_back(&traces[i]->value);
  }
  return out;
}

hiermix::HierParams original_units(const hiermix::ChainTrace& t, const hiermix::HierParams& theta) {
  return t.standardization ? hiermix::destandardize(theta, *t.standardization) : theta;
}

}  // namespace

extern "C" {

const char* hmx_version(void) { return "0.1.0"; }

const char* hmx_status_name(hmx_status status) {
  switch (status) {
    case HMX_OK: return "ok";
    case HMX_ERR_ARGUMENT: return "invalid argument";
    case HMX_ERR_DATA: return "data error";
    case HMX_ERR_IO: return "i/o error";
    case HMX_ERR_NUMERICAL: return "numerical failure";
    case HMX_ERR_CANCELLED: return "cancelled";
    case HMX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* hmx_last_error(void) { return g_last_error.c_str(); }

void hmx_string_free(char* s) { std::free(s); }

hmx_status hmx_dataset_load(const char* path, const char* format, hmx_dataset** out) {
  return guard([&] {
    require(path && out, "hmx_dataset_load: null argument");
    *out = new hmx_dataset{hiermix::load_dataset(path, format_of(format))};
  });
}

hmx_status hmx_dataset_save(const hmx_dataset* data, const char* path, const char* format) {
  return guard([&] {
    require(data && path, "hmx_dataset_save: null argument");
    hiermix::save_dataset(data->value, path, format_of(format));
  });
}

hmx_status hmx_dataset_empty(size_t dimension, hmx_dataset** out) {
  return guard([&] {
    require(out, "hmx_dataset_empty: null argument");
    require(dimension > 0, "hmx_dataset_empty: dimension must be positive");
    auto* d = new hmx_dataset{};
    d->value.dimension = dimension;
    *out = d;
  });
}

void hmx_dataset_free(hmx_dataset* data) { delete data; }

size_t hmx_dataset_dimension(const hmx_dataset* data) { return data ? data->value.dimension : 0; }

size_t hmx_dataset_num_objects(const hmx_dataset* data) { return data ? data->value.num_objects() : 0; }

size_t hmx_dataset_total_points(const hmx_dataset* data) { return data ? data->value.total_points() : 0; }

hmx_status hmx_dataset_num_points(const hmx_dataset* data, size_t object, size_t* out) {
  return guard([&] {
    require(data && out, "hmx_dataset_num_points: null argument");
    require(object < data->value.num_objects(), "hmx_dataset_num_points: object index out of range");
    *out = data->value.num_points(object);
  });
}

hmx_status hmx_dataset_standardize(hmx_dataset* data) {
  return guard([&] {
    require(data, "hmx_dataset_standardize: null argument");
    require(!data->value.standardization, "hmx_dataset_standardize: dataset is already standardized");
    hiermix::standardize(data->value);
  });
}

hmx_status hmx_params_load(const char* path, hmx_params** out) {
  return guard([&] {
    require(path && out, "hmx_params_load: null argument");
    *out = new hmx_params{hiermix::load_params(path)};
  });
}

hmx_status hmx_params_from_json(const char* text, hmx_params** out) {
  return guard([&] {
    require(text && out, "hmx_params_from_json: null argument");
    *out = new hmx_params{hiermix::params_from_json(text)};
  });
}

hmx_status hmx_params_to_json(const hmx_params* params, char** out) {
  return guard([&] {
    require(params && out, "hmx_params_to_json: null argument");
    *out = dup_string(hiermix::params_to_json(params->value));
  });
}

void hmx_params_free(hmx_params* params) { delete params; }

size_t hmx_params_num_groups(const hmx_params* params) { return params ? params->value.num_groups() : 0; }

hmx_status hmx_simulate(const hmx_params* params, size_t n_objects, const char* point_law,
                        uint64_t seed, const char* labels_path, hmx_dataset** out) {
  return guard([&] {
    require(params && out, "hmx_simulate: null argument");
    const hiermix::PointLaw law = point_law ? hiermix::parse_point_law(point_law) : hiermix::PointLaw{};
    hiermix::Rng rng = hiermix::make_rng(seed, 0);
    hiermix::Simulation sim = hiermix::simulate_population(params->value, n_objects, law, rng);
    if (labels_path) hiermix::save_labels(sim.data, sim.truth, labels_path);
    *out = new hmx_dataset{std::move(sim.data)};
  });
}

hmx_status hmx_hyper_default(const hmx_dataset* data, hmx_hyper** out) {
  return guard([&] {
    require(data && out, "hmx_hyper_default: null argument");
    *out = new hmx_hyper{hiermix::default_hyperparameters(data->value)};
  });
}

hmx_status hmx_hyper_load(const char* path, const hmx_dataset* data, hmx_hyper** out) {
  return guard([&] {
    require(path && data && out, "hmx_hyper_load: null argument");
    *out = new hmx_hyper{hiermix::load_hyperparameters(path, data->value)};
  });
}

hmx_status hmx_hyper_set_bounds(hmx_hyper* hyper, int g_min, int g_max, int k_min, int k_max) {
  return guard([&] {
    require(hyper, "hmx_hyper_set_bounds: null argument");
    hiermix::Hyperparameters h = hyper->value;
    h.g_min = g_min;
    h.g_max = g_max;
    h.k_min = k_min;
    h.k_max = k_max;
    h.check();
    hyper->value = h;
  });
}

hmx_status hmx_hyper_to_json(const hmx_hyper* hyper, char** out) {
  return guard([&] {
    require(hyper && out, "hmx_hyper_to_json: null argument");
    *out = dup_string(hiermix::hyperparameters_to_json(hyper->value));
  });
}

void hmx_hyper_free(hmx_hyper* hyper) { delete hyper; }

void hmx_sampler_config_default(hmx_sampler_config* cfg) {
  if (!cfg) return;
  const hiermix::SamplerConfig d;
  cfg->iterations = d.iterations;
  cfg->burn_in = d.burn_in;
  cfg->thin = d.thin;
  cfg->monitor_every = d.monitor_every;
  cfg->seed = d.seed;
  cfg->g_split = d.g_split;
  cfg->g_merge = d.g_merge;
  cfg->k_split = d.k_split;
  cfg->k_merge = d.k_merge;
  cfg->proposal_scale = d.proposal_scale;
  cfg->verify = d.verify ? 1 : 0;
  cfg->initial_groups = d.initial_groups;
  cfg->initial_components = d.initial_components;
}

hmx_status hmx_sampler_config_to_json(const hmx_sampler_config* cfg, char** out) {
  return guard([&] {
    require(cfg && out, "hmx_sampler_config_to_json: null argument");
    *out = dup_string(hiermix::sampler_config_to_json(to_core(*cfg)));
  });
}

hmx_status hmx_run_chain(const hmx_dataset* data, const hmx_hyper* hyper, const hmx_sampler_config* cfg,
                         size_t chain, hmx_progress_fn progress, void* user, hmx_trace** out) {
  return guard([&] {
    require(data && hyper && cfg && out, "hmx_run_chain: null argument");
    hiermix::ProgressFn fn;
    if (progress) {
      fn = [&](const hiermix::ProgressRecord& r) {
        if (progress(r.chain, r.iteration, r.log_likelihood, r.k.size(), user) != 0) throw Cancelled{};
      };
    }
    *out = new hmx_trace{hiermix::run_chain(data->value, hyper->value, to_core(*cfg), chain, std::nullopt, fn)};
  });
}

hmx_status hmx_trace_save(const hmx_trace* trace, const char* path) {
  return guard([&] {
    require(trace && path, "hmx_trace_save: null argument");
    hiermix::save_trace(trace->value, path);
  });
}

hmx_status hmx_trace_load(const char* path, hmx_trace** out) {
  return guard([&] {
    require(path && out, "hmx_trace_load: null argument");
    *out = new hmx_trace{hiermix::load_trace(path)};
  });
}

void hmx_trace_free(hmx_trace* trace) { delete trace; }

size_t hmx_trace_num_samples(const hmx_trace* trace) { return trace ? trace->value.samples.size() : 0; }

size_t hmx_trace_num_monitor(const hmx_trace* trace) { return trace ? trace->value.monitor.size() : 0; }

size_t hmx_trace_burn_in(const hmx_trace* trace) { return trace ? trace->value.config.burn_in : 0; }

hmx_status hmx_trace_move_stats(const hmx_trace* trace, int move, uint64_t* proposed, uint64_t* accepted,
                                uint64_t* blocked) {
  return guard([&] {
    require(trace, "hmx_trace_move_stats: null argument");
    require(move >= 0 && move < 4, "hmx_trace_move_stats: unknown move");
    const auto& s = trace->value.stats;
    if (proposed) *proposed = s.proposed[move];
    if (accepted) *accepted = s.accepted[move];
    if (blocked) *blocked = s.blocked[move];
  });
}

hmx_status hmx_trace_sample_model(const hmx_trace* trace, size_t i, int* counts, size_t capacity, size_t* len) {
  return guard([&] {
    require(trace && len, "hmx_trace_sample_model: null argument");
    require(i < trace->value.samples.size(), "hmx_trace_sample_model: sample index out of range");
    require(counts || capacity == 0, "hmx_trace_sample_model: null counts buffer");
    const std::vector<int> k = trace->value.samples[i].theta.component_counts();
    std::copy_n(k.begin(), std::min(capacity, k.size()), counts);
    *len = k.size();
  });
}

hmx_status hmx_trace_sample_params(const hmx_trace* trace, size_t i, hmx_params** out) {
  return guard([&] {
    require(trace && out, "hmx_trace_sample_params: null argument");
    require(i < trace->value.samples.size(), "hmx_trace_sample_params: sample index out of range");
    *out = new hmx_params{original_units(trace->value, trace->value.samples[i].theta)};
  });
}

void hmx_diag_options_default(hmx_diag_options* opts) {
  if (!opts) return;
  opts->checkpoint_every = hiermix::DiagnosticOptions{}.checkpoint_every;
  opts->first_iteration = 0;
  opts->groups_only = 0;
  opts->window = 5;
  opts->tol = 0.05;
}

hmx_status hmx_diagnose(const hmx_trace* const* traces, size_t n_traces, const hmx_diag_options* opts,
                        const char* report_prefix, hmx_diag_result* out) {
  return guard([&] {
    require(opts && out, "hmx_diagnose: null argument");
    require(opts->checkpoint_every > 0, "hmx_diagnose: checkpoint spacing must be positive");
    require(opts->tol > 0.0, "hmx_diagnose: tolerance must be positive");
    const auto chains = collect(traces, n_traces);
    std::vector<std::vector<hiermix::MonitorRecord>> records;
    std::size_t span = SIZE_MAX;
    for (const auto* t : chains) {
      records.push_back(t->monitor);
      std::size_t last = opts->first_iteration;
      for (const auto& r : t->monitor) last = std::max(last, r.iteration);
      span = std::min(span, last - opts->first_iteration);
    }
    hiermix::DiagnosticOptions o;
    o.checkpoint_every = opts->checkpoint_every;
    o.first_iteration = opts->first_iteration;
    o.grouping = opts->groups_only ? hiermix::ModelGrouping::GroupsOnly : hiermix::ModelGrouping::Full;
    const std::size_t window = std::max<std::size_t>(1, opts->window);
    // Short runs get enough checkpoints to fill the convergence window.
    if (span != SIZE_MAX && span / o.checkpoint_every < window && span >= window) {
      o.checkpoint_every = span / window;
    }
    const hiermix::DiagnosticSeries series = hiermix::compute_diagnostics(records, o);
    const hiermix::ConvergenceReport rep = hiermix::converged(series, window, opts->tol);
    if (report_prefix) hiermix::write_diagnostics_report(series, report_prefix);
    out->converged = rep.converged ? 1 : 0;
    out->checkpoints = series.points.size();
    out->checkpoint_every = o.checkpoint_every;
    out->ratio_chain = rep.ratio_chain;
    out->ratio_model = rep.ratio_model;
    out->ratio_between = rep.ratio_between;
    std::snprintf(out->reason, sizeof out->reason, "%s", rep.reason.c_str());
  });
}

hmx_status hmx_prc_posterior(const hmx_trace* const* traces, size_t n_traces, const hmx_prc_query* queries,
                             size_t n_queries, double level, unsigned threads, double threshold,
                             const char* report_prefix, hmx_prc_result* results) {
  return guard([&] {
    require(queries && results, "hmx_prc_posterior: null argument");
    require(level > 0.0 && level < 1.0, "hmx_prc_posterior: level must lie in (0, 1)");
    const auto chains = collect(traces, n_traces);
    std::vector<hiermix::HierParams> pooled;
    for (const auto* t : chains) {
      for (const auto& s : t->samples) pooled.push_back(original_units(*t, s.theta));
    }
    if (pooled.empty()) throw hiermix::DataError("no retained posterior samples in the given traces");
    std::vector<hiermix::PrcSummary> rows;
    for (size_t q = 0; q < n_queries; ++q) {
      hiermix::PrcQuery query{queries[q].w, queries[q].m, queries[q].n, queries[q].r0};
      rows.push_back(hiermix::posterior_prc(pooled, query, level, threads));
      const auto& r = rows.back();
      results[q] = {r.mean, r.lo, r.hi, r.level, r.samples, r.clamped, r.hi < threshold ? 1 : 0};
    }
    if (report_prefix) hiermix::write_prc_report(rows, threshold, report_prefix);
  });
}

hmx_status hmx_match_probability(const hmx_params* params, size_t g1, size_t g2, double r0, double* out,
                                 int* clamped) {
  return guard([&] {
    require(params && out, "hmx_match_probability: null argument");
    require(g1 < params->value.num_groups() && g2 < params->value.num_groups(),
            "hmx_match_probability: group index out of range");
    require(r0 > 0.0, "hmx_match_probability: r0 must be positive");
    bool c = false;
    *out = hiermix::match_probability(params->value.groups[g1], params->value.groups[g2], r0, &c);
    if (clamped) *clamped = c ? 1 : 0;
  });
}

double hmx_poisson_tail(unsigned w, double lambda) {
  try {
    return hiermix::poisson_tail(w, lambda);
  } catch (...) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

hmx_status hmx_select_cov(const hmx_dataset* data, int k_min, int k_max, uint64_t seed, int restarts,
                          const char* report_prefix, hmx_cov_summary* out) {
  return guard([&] {
    require(data && out, "hmx_select_cov: null argument");
    hiermix::EmOptions opts;
    if (restarts > 0) opts.restarts = restarts;
    const auto rows = hiermix::select_batch(data->value, k_min, k_max, seed, opts);
    hmx_cov_summary s{};
    s.objects = rows.size();
    for (const auto& r : rows) {
      if (r.skipped) {
        ++s.skipped;
      } else {
        ++s.wins[static_cast<int>(r.ranking.winner())];
      }
    }
    if (report_prefix) hiermix::write_bic_report(rows, report_prefix);
    *out = s;
  });
}

}  // extern "C"
