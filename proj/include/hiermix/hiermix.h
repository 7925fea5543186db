/* C interface to the hierarchical mixture sampler and match-probability tools.
 *
 * Every fallible call returns an hmx_status; on failure hmx_last_error() holds a
 * message for the calling thread. Handles are opaque and owned by the caller,
 * who releases them with the matching *_free function. Strings returned through
 * char** are released with hmx_string_free. Labels and indices are zero-based. */
#ifndef HIERMIX_H
#define HIERMIX_H

#include <stddef.h>
#include <stdint.h>

#if defined(HMX_BUILDING_LIBRARY)
#define HMX_API __attribute__((visibility("default")))
#else
#define HMX_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hmx_status {
  HMX_OK = 0,
  HMX_ERR_ARGUMENT = 1,  /* invalid argument or configuration */
  HMX_ERR_DATA = 2,      /* malformed or inconsistent input */
  HMX_ERR_IO = 3,        /* filesystem failure */
  HMX_ERR_NUMERICAL = 4, /* non-finite or degenerate computation */
  HMX_ERR_CANCELLED = 5, /* a progress callback asked to stop */
  HMX_ERR_INTERNAL = 6
} hmx_status;

typedef struct hmx_dataset hmx_dataset;
typedef struct hmx_params hmx_params;
typedef struct hmx_hyper hmx_hyper;
typedef struct hmx_trace hmx_trace;

HMX_API const char* hmx_version(void);
HMX_API const char* hmx_status_name(hmx_status status);
/* Message for the last failure on this thread; empty after a success. */
HMX_API const char* hmx_last_error(void);
HMX_API void hmx_string_free(char* s);

/* ---- datasets ----------------------------------------------------------- */

/* format: "csv", "json" or NULL/"auto" (by extension). */
HMX_API hmx_status hmx_dataset_load(const char* path, const char* format, hmx_dataset** out);
HMX_API hmx_status hmx_dataset_save(const hmx_dataset* data, const char* path, const char* format);
/* Dataset with no objects, for prior-only runs. */
HMX_API hmx_status hmx_dataset_empty(size_t dimension, hmx_dataset** out);
HMX_API void hmx_dataset_free(hmx_dataset* data);
HMX_API size_t hmx_dataset_dimension(const hmx_dataset* data);
HMX_API size_t hmx_dataset_num_objects(const hmx_dataset* data);
HMX_API size_t hmx_dataset_total_points(const hmx_dataset* data);
HMX_API hmx_status hmx_dataset_num_points(const hmx_dataset* data, size_t object, size_t* out);
/* Centres and scales each coordinate; the transform travels into traces. */
HMX_API hmx_status hmx_dataset_standardize(hmx_dataset* data);

/* ---- parameters and simulation ------------------------------------------ */

HMX_API hmx_status hmx_params_load(const char* path, hmx_params** out);
HMX_API hmx_status hmx_params_from_json(const char* text, hmx_params** out);
HMX_API hmx_status hmx_params_to_json(const hmx_params* params, char** out);
HMX_API void hmx_params_free(hmx_params* params);
HMX_API size_t hmx_params_num_groups(const hmx_params* params);

/* point_law: "fixed:N" or "poisson:M". labels_path may be NULL. */
HMX_API hmx_status hmx_simulate(const hmx_params* params, size_t n_objects, const char* point_law,
                                uint64_t seed, const char* labels_path, hmx_dataset** out);

/* ---- hyperparameters ----------------------------------------------------- */

HMX_API hmx_status hmx_hyper_default(const hmx_dataset* data, hmx_hyper** out);
/* Keys missing from the file keep their data-driven defaults. */
HMX_API hmx_status hmx_hyper_load(const char* path, const hmx_dataset* data, hmx_hyper** out);
HMX_API hmx_status hmx_hyper_set_bounds(hmx_hyper* hyper, int g_min, int g_max, int k_min, int k_max);
HMX_API hmx_status hmx_hyper_to_json(const hmx_hyper* hyper, char** out);
HMX_API void hmx_hyper_free(hmx_hyper* hyper);

/* ---- sampler -------------------------------------------------------------- */

typedef struct hmx_sampler_config {
  size_t iterations;
  size_t burn_in;
  size_t thin;
  size_t monitor_every; /* 0: same as thin */
  uint64_t seed;
  double g_split, g_merge; /* per-sweep group-move probabilities */
  double k_split, k_merge; /* per-group component-move probabilities */
  double proposal_scale;
  int verify; /* nonzero: recheck cached densities after every step */
  int initial_groups;
  int initial_components;
} hmx_sampler_config;

HMX_API void hmx_sampler_config_default(hmx_sampler_config* cfg);
HMX_API hmx_status hmx_sampler_config_to_json(const hmx_sampler_config* cfg, char** out);

/* Called at every monitor record; a nonzero return cancels the run. */
typedef int (*hmx_progress_fn)(size_t chain, size_t iteration, double log_likelihood,
                               size_t groups, void* user);

/* The chain's random stream is derived from (cfg->seed, chain). */
HMX_API hmx_status hmx_run_chain(const hmx_dataset* data, const hmx_hyper* hyper,
                                 const hmx_sampler_config* cfg, size_t chain,
                                 hmx_progress_fn progress, void* user, hmx_trace** out);

HMX_API hmx_status hmx_trace_save(const hmx_trace* trace, const char* path);
HMX_API hmx_status hmx_trace_load(const char* path, hmx_trace** out);
HMX_API void hmx_trace_free(hmx_trace* trace);
HMX_API size_t hmx_trace_num_samples(const hmx_trace* trace);
HMX_API size_t hmx_trace_num_monitor(const hmx_trace* trace);
HMX_API size_t hmx_trace_burn_in(const hmx_trace* trace);

enum { HMX_MOVE_G_SPLIT = 0, HMX_MOVE_G_MERGE = 1, HMX_MOVE_K_SPLIT = 2, HMX_MOVE_K_MERGE = 3 };

HMX_API hmx_status hmx_trace_move_stats(const hmx_trace* trace, int move, uint64_t* proposed,
                                        uint64_t* accepted, uint64_t* blocked);
/* Writes G and up to `capacity` component counts of retained sample i; *len
 * receives G even when it exceeds the capacity. */
HMX_API hmx_status hmx_trace_sample_model(const hmx_trace* trace, size_t i, int* counts,
                                          size_t capacity, size_t* len);
/* Parameters of retained sample i, in original units when the data was standardized. */
HMX_API hmx_status hmx_trace_sample_params(const hmx_trace* trace, size_t i, hmx_params** out);

/* ---- convergence diagnostics --------------------------------------------- */

typedef struct hmx_diag_options {
  size_t checkpoint_every;
  size_t first_iteration; /* only monitor records after this iteration are used */
  int groups_only;        /* group draws by G instead of the full (G, K) model */
  size_t window;          /* trailing checkpoints that must agree */
  double tol;
} hmx_diag_options;

typedef struct hmx_diag_result {
  int converged;
  size_t checkpoints;
  size_t checkpoint_every; /* spacing actually used */
  double ratio_chain;      /* W_c / V at the last checkpoint */
  double ratio_model;      /* W_mW_c / W_m */
  double ratio_between;    /* B_mW_c / B_m */
  char reason[256];
} hmx_diag_result;

HMX_API void hmx_diag_options_default(hmx_diag_options* opts);
/* Spacing shrinks when the chains are too short to give `window` checkpoints.
 * report_prefix may be NULL; otherwise <prefix>.csv and three SVG plots are written. */
HMX_API hmx_status hmx_diagnose(const hmx_trace* const* traces, size_t n_traces,
                                const hmx_diag_options* opts, const char* report_prefix,
                                hmx_diag_result* out);

/* ---- match probability ----------------------------------------------------- */

typedef struct hmx_prc_query {
  unsigned w, m, n;
  double r0;
} hmx_prc_query;

typedef struct hmx_prc_result {
  double mean;
  double hpd_lo;
  double hpd_hi;
  double level;
  size_t samples;
  size_t clamped;
  int below_threshold; /* hpd_hi < threshold */
} hmx_prc_result;

/* Pools the retained samples of every trace. r0 is in original units.
 * threads = 0 uses the hardware concurrency. report_prefix may be NULL. */
HMX_API hmx_status hmx_prc_posterior(const hmx_trace* const* traces, size_t n_traces,
                                     const hmx_prc_query* queries, size_t n_queries, double level,
                                     unsigned threads, double threshold, const char* report_prefix,
                                     hmx_prc_result* results);
/* Match probability between groups g1 and g2 of a parameter set. */
HMX_API hmx_status hmx_match_probability(const hmx_params* params, size_t g1, size_t g2, double r0,
                                         double* out, int* clamped);
/* P(S >= w) for S ~ Poisson(lambda), or NaN for lambda < 0. */
HMX_API double hmx_poisson_tail(unsigned w, double lambda);

/* ---- covariance-structure selection ---------------------------------------- */

typedef struct hmx_cov_summary {
  size_t objects;
  size_t skipped;
  size_t wins[4]; /* diagonal-tied, diagonal-free, full-tied, full-free */
} hmx_cov_summary;

/* restarts <= 0 keeps the default. report_prefix may be NULL; otherwise
 * <prefix>_objects.csv and <prefix>_aggregate.csv are written. */
HMX_API hmx_status hmx_select_cov(const hmx_dataset* data, int k_min, int k_max, uint64_t seed,
                                  int restarts, const char* report_prefix, hmx_cov_summary* out);

#ifdef __cplusplus
}
#endif

#endif
