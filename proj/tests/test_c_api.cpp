#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "hiermix/hiermix.h"

namespace fs = std::filesystem;

namespace {

const char* kTruth = R"({"groups": [
  {"weight": 0.4, "mixing": [1.0], "means": [[-5, 0]], "variances": [[1, 1]]},
  {"weight": 0.6, "mixing": [0.5, 0.5], "means": [[3, -2], [7, 2]], "variances": [[0.5, 0.5], [0.5, 0.5]]}]})";

fs::path scratch() {
  const char* env = std::getenv("HIERMIX_TEST_TMP");
  fs::path p = env ? fs::path(env) : fs::temp_directory_path() / "hiermix_capi";
  fs::create_directories(p);
  return p;
}

int cancel_after_two(size_t, size_t, double, size_t, void* user) {
  int* calls = static_cast<int*>(user);
  return ++*calls >= 2;
}

}  // namespace

TEST_CASE("status names, version and last error") {
  CHECK(std::string(hmx_version()).size() > 0);
  CHECK(std::string(hmx_status_name(HMX_OK)) == "ok");
  CHECK(std::string(hmx_status_name(HMX_ERR_DATA)).size() > 0);
  hmx_dataset* d = nullptr;
  CHECK(hmx_dataset_load("/nonexistent/file.csv", nullptr, &d) == HMX_ERR_IO);
  CHECK(d == nullptr);
  CHECK(std::string(hmx_last_error()).find("/nonexistent/file.csv") != std::string::npos);
  CHECK(hmx_dataset_empty(2, &d) == HMX_OK);
  CHECK(std::string(hmx_last_error()).empty());
  hmx_dataset_free(d);
  CHECK(hmx_dataset_load(nullptr, nullptr, &d) == HMX_ERR_ARGUMENT);
  CHECK(hmx_dataset_load("x.csv", "xml", &d) == HMX_ERR_ARGUMENT);
  CHECK(std::isnan(hmx_poisson_tail(1, -1.0)));
  CHECK(hmx_poisson_tail(1, 1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
  hmx_dataset_free(nullptr);
  hmx_trace_free(nullptr);
}

TEST_CASE("params, simulation, fitting, trace round trip, diagnostics and PRC") {
  const fs::path dir = scratch();
  hmx_params* truth = nullptr;
  REQUIRE(hmx_params_from_json(kTruth, &truth) == HMX_OK);
  CHECK(hmx_params_num_groups(truth) == 2);
  char* json = nullptr;
  REQUIRE(hmx_params_to_json(truth, &json) == HMX_OK);
  CHECK(std::string(json).find("groups") != std::string::npos);
  hmx_string_free(json);
  hmx_params* invalid = nullptr;
  CHECK(hmx_params_from_json(R"({"groups": [{"weight": 0.5, "mixing": [1], "means": [[0,0]], "variances": [[1,1]]}]})", &invalid) == HMX_ERR_DATA);

  double p = 0.0;
  int clamped = 1;
  CHECK(hmx_match_probability(truth, 0, 0, 0.1, &p, &clamped) == HMX_OK);
  CHECK(p > 0.0);
  CHECK(clamped == 0);
  CHECK(hmx_match_probability(truth, 0, 5, 0.1, &p, &clamped) == HMX_ERR_ARGUMENT);

  hmx_dataset* data = nullptr;
  const std::string labels = (dir / "labels.csv").string();
  REQUIRE(hmx_simulate(truth, 30, "fixed:12", 9, labels.c_str(), &data) == HMX_OK);
  CHECK(fs::exists(labels));
  CHECK(hmx_dataset_num_objects(data) == 30);
  CHECK(hmx_dataset_total_points(data) == 360);
  size_t np = 0;
  CHECK(hmx_dataset_num_points(data, 3, &np) == HMX_OK);
  CHECK(np == 12);
  CHECK(hmx_dataset_num_points(data, 30, &np) == HMX_ERR_ARGUMENT);
  hmx_dataset* bad = nullptr;
  CHECK(hmx_simulate(truth, 3, "gaussian:2", 1, nullptr, &bad) == HMX_ERR_ARGUMENT);
  const std::string data_path = (dir / "data.csv").string();
  REQUIRE(hmx_dataset_save(data, data_path.c_str(), nullptr) == HMX_OK);
  hmx_dataset* reloaded = nullptr;
  REQUIRE(hmx_dataset_load(data_path.c_str(), "csv", &reloaded) == HMX_OK);
  CHECK(hmx_dataset_total_points(reloaded) == 360);
  hmx_dataset_free(reloaded);

  hmx_hyper* hyper = nullptr;
  REQUIRE(hmx_hyper_default(data, &hyper) == HMX_OK);
  CHECK(hmx_hyper_set_bounds(hyper, 3, 2, 1, 4) == HMX_ERR_ARGUMENT);
  CHECK(hmx_hyper_set_bounds(hyper, 1, 4, 1, 4) == HMX_OK);
  REQUIRE(hmx_hyper_to_json(hyper, &json) == HMX_OK);
  CHECK(std::string(json).find("\"g_max\": 4") != std::string::npos);
  hmx_string_free(json);

  hmx_sampler_config cfg;
  hmx_sampler_config_default(&cfg);
  cfg.iterations = 400;
  cfg.burn_in = 100;
  cfg.thin = 5;
  cfg.seed = 21;
  REQUIRE(hmx_sampler_config_to_json(&cfg, &json) == HMX_OK);
  CHECK(std::string(json).find("iterations") != std::string::npos);
  hmx_string_free(json);

  hmx_sampler_config broken = cfg;
  broken.thin = 0;
  hmx_trace* none = nullptr;
  CHECK(hmx_run_chain(data, hyper, &broken, 0, nullptr, nullptr, &none) == HMX_ERR_ARGUMENT);
  int calls = 0;
  CHECK(hmx_run_chain(data, hyper, &cfg, 0, cancel_after_two, &calls, &none) == HMX_ERR_CANCELLED);
  CHECK(calls == 2);
  CHECK(none == nullptr);

  hmx_trace* traces[2] = {nullptr, nullptr};
  for (size_t c = 0; c < 2; ++c) REQUIRE(hmx_run_chain(data, hyper, &cfg, c, nullptr, nullptr, &traces[c]) == HMX_OK);
  CHECK(hmx_trace_num_samples(traces[0]) == 60);
  CHECK(hmx_trace_num_monitor(traces[0]) == 80);
  CHECK(hmx_trace_burn_in(traces[0]) == 100);
  uint64_t proposed = 0, accepted = 0, blocked = 0;
  CHECK(hmx_trace_move_stats(traces[0], HMX_MOVE_K_SPLIT, &proposed, &accepted, &blocked) == HMX_OK);
  CHECK(proposed > 0);
  CHECK(accepted <= proposed);
  CHECK(hmx_trace_move_stats(traces[0], 7, &proposed, &accepted, &blocked) == HMX_ERR_ARGUMENT);

  int counts[8];
  size_t len = 0;
  CHECK(hmx_trace_sample_model(traces[0], 59, counts, 8, &len) == HMX_OK);
  CHECK(len >= 1);
  CHECK(len <= 4);
  CHECK(hmx_trace_sample_model(traces[0], 60, counts, 8, &len) == HMX_ERR_ARGUMENT);
  hmx_params* sample = nullptr;
  REQUIRE(hmx_trace_sample_params(traces[0], 0, &sample) == HMX_OK);
  CHECK(hmx_params_num_groups(sample) == len);
  hmx_params_free(sample);

  const std::string trace_path = (dir / "chain0.trace.jsonl").string();
  REQUIRE(hmx_trace_save(traces[0], trace_path.c_str()) == HMX_OK);
  hmx_trace* back = nullptr;
  REQUIRE(hmx_trace_load(trace_path.c_str(), &back) == HMX_OK);
  CHECK(hmx_trace_num_samples(back) == 60);
  CHECK(hmx_trace_num_monitor(back) == 80);
  hmx_trace_free(back);
  const std::string corrupt = (dir / "corrupt.jsonl").string();
  {
    FILE* f = std::fopen(corrupt.c_str(), "w");
    std::fputs("{\"type\":\"sample\"}\n", f);
    std::fclose(f);
  }
  CHECK(hmx_trace_load(corrupt.c_str(), &back) == HMX_ERR_DATA);

  hmx_diag_options opts;
  hmx_diag_options_default(&opts);
  CHECK(opts.checkpoint_every == 10000);
  CHECK(opts.window == 5);
  CHECK(opts.tol == 0.05);
  hmx_diag_result diag;
  const std::string prefix = (dir / "diag").string();
  REQUIRE(hmx_diagnose(traces, 2, &opts, prefix.c_str(), &diag) == HMX_OK);
  CHECK(diag.checkpoints >= opts.window);
  CHECK(diag.checkpoint_every < 10000);
  CHECK(std::strlen(diag.reason) > 0);
  CHECK(fs::exists(prefix + ".csv"));
  CHECK(hmx_diagnose(traces, 1, &opts, nullptr, &diag) == HMX_ERR_ARGUMENT);

  hmx_prc_query queries[2] = {{2, 20, 20, 0.5}, {6, 20, 20, 0.5}};
  hmx_prc_result res[2];
  REQUIRE(hmx_prc_posterior(traces, 2, queries, 2, 0.95, 1, 0.003, nullptr, res) == HMX_OK);
  CHECK(res[0].samples == 120);
  CHECK(res[0].hpd_lo <= res[0].hpd_hi);
  CHECK(res[0].mean >= 0.0);
  CHECK(res[0].mean <= 1.0);
  CHECK(res[1].mean <= res[0].mean);
  hmx_prc_query zero{1, 10, 10, 0.0};
  CHECK(hmx_prc_posterior(traces, 2, &zero, 1, 0.95, 1, 0.003, nullptr, res) == HMX_ERR_ARGUMENT);

  hmx_cov_summary cov;
  REQUIRE(hmx_select_cov(data, 1, 3, 4, 2, nullptr, &cov) == HMX_OK);
  CHECK(cov.objects == 30);
  CHECK(cov.skipped == 0);
  CHECK(cov.wins[0] + cov.wins[1] + cov.wins[2] + cov.wins[3] == 30);

  for (auto* t : traces) hmx_trace_free(t);
  hmx_hyper_free(hyper);
  hmx_dataset_free(data);
  hmx_params_free(truth);
}

TEST_CASE("prior-only run on an empty dataset") {
  hmx_dataset* empty = nullptr;
  REQUIRE(hmx_dataset_empty(2, &empty) == HMX_OK);
  CHECK(hmx_dataset_num_objects(empty) == 0);
  hmx_hyper* hyper = nullptr;
  REQUIRE(hmx_hyper_default(empty, &hyper) == HMX_OK);
  hmx_sampler_config cfg;
  hmx_sampler_config_default(&cfg);
  cfg.iterations = 200;
  cfg.burn_in = 0;
  cfg.thin = 1;
  cfg.seed = 1;
  hmx_trace* t = nullptr;
  REQUIRE(hmx_run_chain(empty, hyper, &cfg, 0, nullptr, nullptr, &t) == HMX_OK);
  CHECK(hmx_trace_num_samples(t) == 200);
  hmx_trace_free(t);
  hmx_hyper_free(hyper);
  hmx_dataset_free(empty);
}
