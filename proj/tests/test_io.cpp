#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <unistd.h>

#include "hiermix/error.hpp"
#include "hiermix/io.hpp"
#include "hiermix/report.hpp"
#include "support.hpp"

using namespace hiermix;
using namespace hiermix::testing;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("hiermix_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

ChainTrace random_trace(std::size_t samples, Rng& rng) {
  ChainTrace t;
  t.seed = 123456789012345ULL;
  t.chain = 2;
  t.config.iterations = samples * 3;
  t.config.burn_in = 7;
  t.config.seed = t.seed;
  t.hyper.mu0 = {0.1, -0.2};
  t.hyper.tau2 = {3.0, 1.0 / 3.0};
  t.hyper.source = "file";
  t.standardization = Standardization{{1.0 / 7.0, 2.5}, {0.3, 11.0}};
  t.stats.proposed = {10, 20, 30, 40};
  t.stats.accepted = {1, 2, 3, 4};
  t.stats.blocked = {0, 1, 0, 2};
  for (std::size_t i = 0; i < samples; ++i) {
    std::vector<std::size_t> counts(1 + i % 3);
    for (auto& k : counts) k = 1 + static_cast<std::size_t>(uniform01(rng) * 3);
    t.samples.push_back({10 + 3 * i, random_theta(counts, 2, rng), -1000.0 * uniform01(rng), -1e3 * uniform01(rng) - 1e-17});
  }
  for (std::size_t i = 0; i < samples / 2; ++i) t.monitor.push_back({5 * (i + 1), -std::exp(uniform01(rng) * 8), {1, 2}});
  return t;
}

void check_theta_equal(const HierParams& a, const HierParams& b) {
  REQUIRE(a.num_groups() == b.num_groups());
  for (std::size_t g = 0; g < a.num_groups(); ++g) {
    CHECK(a.groups[g].weight == b.groups[g].weight);
    CHECK(a.groups[g].mixing == b.groups[g].mixing);
    REQUIRE(a.groups[g].size() == b.groups[g].size());
    for (std::size_t k = 0; k < a.groups[g].size(); ++k) {
      CHECK(a.groups[g].components[k].mean == b.groups[g].components[k].mean);
      CHECK(a.groups[g].components[k].var == b.groups[g].components[k].var);
    }
  }
}

}  // namespace

TEST_CASE("CSV dataset: grouping by id, dimension, comments") {
  TempDir tmp;
  write_text(tmp / "d.csv",
             "# hiermix dataset v1\n"
             "object_id,x1,x2\n"
             "a,1,2\n"
             "b,3,4\n"
             "# comment\n"
             "a,5,6\n"
             "b,7,8\n"
             "a,9,10\n"
             "b,11,12\n");
  const Dataset d = load_dataset(tmp / "d.csv");
  CHECK(d.dimension == 2);
  REQUIRE(d.num_objects() == 2);
  CHECK(d.objects[0].id == "a");
  CHECK(d.num_points(0) == 3);
  CHECK(d.num_points(1) == 3);
  CHECK(d.point(0, 1)[1] == 6.0);
  CHECK(d.point(1, 2)[0] == 11.0);
  CHECK(d.total_points() == 6);
}

TEST_CASE("CSV dataset errors carry line numbers") {
  TempDir tmp;
  write_text(tmp / "ragged.csv", "object_id,x1,x2\na,1,2\na,1,2,3\n");
  CHECK(error_of([&] { load_dataset(tmp / "ragged.csv"); }).find("line 3") != std::string::npos);
  write_text(tmp / "nan.csv", "object_id,x1,x2\na,1,2\na,zz,2\n");
  CHECK(error_of([&] { load_dataset(tmp / "nan.csv"); }).find("line 3") != std::string::npos);
  write_text(tmp / "inf.csv", "object_id,x1,x2\na,inf,2\n");
  CHECK_THROWS_AS(load_dataset(tmp / "inf.csv"), DataError);
  write_text(tmp / "empty.csv", "");
  CHECK(error_of([&] { load_dataset(tmp / "empty.csv"); }).find("empty") != std::string::npos);
  write_text(tmp / "ver.csv", "# hiermix dataset v9\nobject_id,x1,x2\n");
  CHECK_THROWS_AS(load_dataset(tmp / "ver.csv"), DataError);
  CHECK_THROWS_AS(load_dataset(tmp / "missing.csv"), IoError);
}

TEST_CASE("dataset round trips through CSV and JSON") {
  TempDir tmp;
  Rng rng = make_rng(1);
  const HierParams theta = random_theta({2, 1}, 2, rng);
  Dataset d = simulate_population(theta, 12, {PointLaw::Kind::Poisson, 5}, rng).data;
  d.objects[3].id = "with,comma \"quoted\"";
  for (const char* name : {"r.csv", "r.json"}) {
    save_dataset(d, tmp / name);
    const Dataset back = load_dataset(tmp / name);
    REQUIRE(back.num_objects() == d.num_objects());
    for (std::size_t i = 0; i < d.num_objects(); ++i) {
      CHECK(back.objects[i].id == d.objects[i].id);
      CHECK(back.objects[i].coords == d.objects[i].coords);
    }
  }
  write_text(tmp / "bad.json", "[{\"id\": \"a\", \"points\": [[1, 2], [3]]}]");
  CHECK_THROWS_AS(load_dataset(tmp / "bad.json"), DataError);
  write_text(tmp / "obj.json", "{\"dimension\": 3, \"objects\": [{\"id\": \"a\", \"points\": [[1, 2, 3]]}]}");
  CHECK(load_dataset(tmp / "obj.json").dimension == 3);
}

TEST_CASE("trace round trip is bit exact and deterministic") {
  TempDir tmp;
  Rng rng = make_rng(2);
  const ChainTrace t = random_trace(1000, rng);
  save_trace(t, tmp / "t.jsonl");
  const ChainTrace back = load_trace(tmp / "t.jsonl");
  CHECK(back.seed == t.seed);
  CHECK(back.chain == t.chain);
  CHECK(back.config.iterations == t.config.iterations);
  CHECK(back.config.burn_in == t.config.burn_in);
  CHECK(back.hyper.mu0 == t.hyper.mu0);
  CHECK(back.hyper.tau2 == t.hyper.tau2);
  REQUIRE(back.standardization.has_value());
  CHECK(back.standardization->center == t.standardization->center);
  CHECK(back.standardization->scale == t.standardization->scale);
  CHECK(back.stats.proposed == t.stats.proposed);
  CHECK(back.stats.blocked == t.stats.blocked);
  REQUIRE(back.samples.size() == 1000);
  for (std::size_t i = 0; i < t.samples.size(); ++i) {
    CHECK(back.samples[i].iteration == t.samples[i].iteration);
    CHECK(back.samples[i].log_likelihood == t.samples[i].log_likelihood);
    CHECK(back.samples[i].log_posterior == t.samples[i].log_posterior);
    check_theta_equal(back.samples[i].theta, t.samples[i].theta);
  }
  REQUIRE(back.monitor.size() == t.monitor.size());
  for (std::size_t i = 0; i < t.monitor.size(); ++i) {
    CHECK(back.monitor[i].log_likelihood == t.monitor[i].log_likelihood);
    CHECK(back.monitor[i].k == t.monitor[i].k);
  }
  save_trace(back, tmp / "u.jsonl");
  CHECK(read_file(tmp / "t.jsonl") == read_file(tmp / "u.jsonl"));
}

TEST_CASE("empty trace is a header-only file") {
  TempDir tmp;
  ChainTrace t;
  t.hyper.mu0 = {0, 0};
  t.hyper.tau2 = {1, 1};
  save_trace(t, tmp / "e.jsonl");
  const std::string text = read_file(tmp / "e.jsonl");
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  const ChainTrace back = load_trace(tmp / "e.jsonl");
  CHECK(back.samples.empty());
  CHECK(back.monitor.empty());
  CHECK_FALSE(back.standardization.has_value());
}

TEST_CASE("truncated, corrupt and mismatched traces are rejected") {
  TempDir tmp;
  Rng rng = make_rng(3);
  const ChainTrace t = random_trace(10, rng);
  save_trace(t, tmp / "t.jsonl");
  std::string text = read_file(tmp / "t.jsonl");
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  std::string cut;
  for (std::size_t i = 0; i < 5; ++i) cut += lines[i] + "\n";
  write_text(tmp / "cut.jsonl", cut);
  const std::string msg = error_of([&] { load_trace(tmp / "cut.jsonl"); });
  CHECK(msg.find("truncated") != std::string::npos);
  CHECK(msg.find("sample at iteration " + std::to_string(t.samples[3].iteration)) != std::string::npos);

  // A half-written final line.
  write_text(tmp / "half.jsonl", cut + lines[5].substr(0, lines[5].size() / 2));
  const std::string half = error_of([&] { load_trace(tmp / "half.jsonl"); });
  CHECK(half.find("line 6") != std::string::npos);
  CHECK(half.find("last good record") != std::string::npos);

  std::string bumped = text;
  bumped.replace(bumped.find("\"version\":1"), 11, "\"version\":2");
  write_text(tmp / "v2.jsonl", bumped);
  CHECK(error_of([&] { load_trace(tmp / "v2.jsonl"); }).find("version") != std::string::npos);

  write_text(tmp / "none.jsonl", "");
  CHECK_THROWS_AS(load_trace(tmp / "none.jsonl"), DataError);

  // An invalid sample (weights out of order) fails validation on load.
  ChainTrace bad = t;
  bad.samples.resize(1);
  bad.monitor.clear();
  bad.samples[0].theta.groups = {single(0, 0, 1, 1), single(1, 1, 1, 1)};
  bad.samples[0].theta.groups[0].weight = 0.7;
  bad.samples[0].theta.groups[1].weight = 0.3;
  save_trace(bad, tmp / "bad.jsonl");
  CHECK(error_of([&] { load_trace(tmp / "bad.jsonl"); }).find("invalid sample") != std::string::npos);
}

TEST_CASE("atomic writes leave no temporary files") {
  TempDir tmp;
  write_atomic(tmp / "sub" / "x.txt", "hello");
  CHECK(read_file(tmp / "sub" / "x.txt") == "hello");
  write_atomic(tmp / "sub" / "x.txt", "again");
  CHECK(read_file(tmp / "sub" / "x.txt") == "again");
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(tmp / "sub")) n += e.is_regular_file() ? 1 : 0;
  CHECK(n == 1);
}

TEST_CASE("simulated group and component frequencies match the parameters") {
  HierParams theta;
  GroupParams a = single(-3, 0, 1, 1);
  a.weight = 0.3;
  GroupParams b;
  b.weight = 0.7;
  b.mixing = {0.2, 0.8};
  b.components = {{{0.0, 0.0}, {1.0, 1.0}}, {{4.0, 0.0}, {1.0, 1.0}}};
  theta.groups = {a, b};
  Rng rng = make_rng(4);
  const Simulation sim = simulate_population(theta, 10000, {PointLaw::Kind::Fixed, 3}, rng);
  double in_b = 0.0, comp0 = 0.0, points_b = 0.0;
  for (std::size_t i = 0; i < 10000; ++i) {
    CHECK(sim.data.num_points(i) == 3);
    if (sim.truth.group[i] != 1) continue;
    in_b += 1.0;
    for (int z : sim.truth.component[i]) {
      points_b += 1.0;
      comp0 += z == 0 ? 1.0 : 0.0;
    }
  }
  CHECK(std::abs(in_b / 10000 - 0.7) < 3 * std::sqrt(0.21 / 10000));
  // Points in one object share a group but their components are independent.
  CHECK(std::abs(comp0 / points_b - 0.2) < 3 * std::sqrt(0.16 / points_b));
}

TEST_CASE("degenerate generator and Poisson counts") {
  HierParams theta;
  theta.groups = {single(2.5, -1.5, 1e-20, 1e-20)};
  Rng rng = make_rng(5);
  const Simulation sim = simulate_population(theta, 50, {PointLaw::Kind::Poisson, 2}, rng);
  double total = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(sim.data.num_points(i) >= 1);
    total += static_cast<double>(sim.data.num_points(i));
    for (std::size_t j = 0; j < sim.data.num_points(i); ++j) {
      CHECK(sim.data.point(i, j)[0] == doctest::Approx(2.5).epsilon(1e-9));
      CHECK(sim.data.point(i, j)[1] == doctest::Approx(-1.5).epsilon(1e-9));
    }
  }
  CHECK(total > 50.0);
  HierParams bad;
  bad.groups = {single(0, 0, -1, 1)};
  CHECK_THROWS_AS(simulate_population(bad, 1, {}, rng), DataError);
}

TEST_CASE("point law parsing") {
  const PointLaw f = parse_point_law("fixed:40");
  CHECK(f.kind == PointLaw::Kind::Fixed);
  CHECK(f.value == 40.0);
  const PointLaw p = parse_point_law("poisson:60");
  CHECK(p.kind == PointLaw::Kind::Poisson);
  CHECK(p.value == 60.0);
  CHECK(parse_point_law("poisson:2.5").value == 2.5);
  for (const char* bad : {"fixed:2.5", "fixed:0", "poisson:-1", "normal:3", "poisson", "fixed:abc", "fixed:3x"}) {
    CHECK_THROWS_AS(parse_point_law(bad), std::invalid_argument);
  }
}

TEST_CASE("standardize then destandardize recovers original units") {
  Rng rng = make_rng(6);
  const HierParams theta = random_theta({1, 2}, 2, rng);
  Dataset d = simulate_population(theta, 30, {PointLaw::Kind::Fixed, 10}, rng).data;
  const Dataset raw = d;
  const Standardization st = standardize(d);
  double m0 = 0.0, s0 = 0.0;
  for (const auto& o : d.objects) {
    for (std::size_t p = 0; p < o.coords.size(); p += 2) m0 += o.coords[p];
  }
  m0 /= static_cast<double>(d.total_points());
  for (const auto& o : d.objects) {
    for (std::size_t p = 0; p < o.coords.size(); p += 2) s0 += (o.coords[p] - m0) * (o.coords[p] - m0);
  }
  CHECK(std::abs(m0) < 1e-12);
  CHECK(s0 / static_cast<double>(d.total_points()) == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 0; i < d.num_objects(); ++i) {
    for (std::size_t p = 0; p < d.objects[i].coords.size(); ++p) {
      const std::size_t b = p % 2;
      CHECK(st.center[b] + st.scale[b] * d.objects[i].coords[p] == doctest::Approx(raw.objects[i].coords[p]).epsilon(1e-12));
    }
  }
  HierParams unit;
  unit.groups = {single(1.0, -1.0, 2.0, 0.5)};
  const HierParams back = destandardize(unit, st);
  CHECK(back.groups[0].components[0].mean[0] == doctest::Approx(st.center[0] + st.scale[0]));
  CHECK(back.groups[0].components[0].var[1] == doctest::Approx(0.5 * st.scale[1] * st.scale[1]));
  Dataset one;
  one.objects.push_back({"x", {1.0, 2.0}});
  CHECK_THROWS_AS(standardize(one), DataError);
}

TEST_CASE("parameter specs: round trip, renormalization, violations") {
  Rng rng = make_rng(7);
  const HierParams theta = random_theta({3, 1}, 2, rng);
  check_theta_equal(params_from_json(params_to_json(theta)), theta);
  const std::string near_one = R"({"groups": [
    {"weight": 0.4, "mixing": [1.0], "means": [[0, 0]], "variances": [[1, 1]]},
    {"weight": 0.6000000000001, "mixing": [0.5, 0.5], "means": [[-1, 0], [1, 0]], "variances": [[1, 1], [1, 1]]}]})";
  const HierParams fixed = params_from_json(near_one);
  CHECK(fixed.groups[0].weight + fixed.groups[1].weight == doctest::Approx(1.0).epsilon(1e-15));
  const std::string off = R"({"groups": [{"weight": 0.9, "mixing": [1.0], "means": [[0, 0]], "variances": [[1, 1]]}]})";
  CHECK_THROWS_AS(params_from_json(off), DataError);
  const std::string unsorted = R"({"groups": [
    {"weight": 1.0, "mixing": [0.5, 0.5], "means": [[1, 0], [-1, 0]], "variances": [[1, 1], [1, 1]]}]})";
  CHECK_THROWS_AS(params_from_json(unsorted), DataError);
  CHECK_THROWS_AS(params_from_json("{not json"), DataError);
}

TEST_CASE("hyperparameter files: scalar broadcast, defaults kept, bad values rejected") {
  Dataset d;
  d.objects.push_back({"a", {0, 0, 2, 4, 4, 8}});
  const Hyperparameters base = default_hyperparameters(d);
  const Hyperparameters h = hyperparameters_from_json(R"({"mu0": 1.5, "alpha0": 4, "g_max": 3})", base);
  CHECK(h.mu0 == std::vector<double>{1.5, 1.5});
  CHECK(h.alpha0 == 4.0);
  CHECK(h.g_max == 3);
  CHECK(h.tau2 == base.tau2);
  CHECK(h.beta0 == base.beta0);
  CHECK_THROWS_AS(hyperparameters_from_json(R"({"alpha0": -1})", base), DataError);
  CHECK_THROWS_AS(hyperparameters_from_json(R"({"g_min": 4, "g_max": 2})", base), DataError);
  const Hyperparameters again = hyperparameters_from_json(hyperparameters_to_json(h), base);
  CHECK(again.mu0 == h.mu0);
  CHECK(again.tau2 == h.tau2);
  CHECK(again.k_max == h.k_max);
}

TEST_CASE("labels file lists one row per point with one-based labels") {
  TempDir tmp;
  Dataset d;
  d.objects = {{"a", {0, 0, 1, 1}}, {"b", {}}};
  Labels l;
  l.group = {1, 0};
  l.component = {{0, 1}, {}};
  save_labels(d, l, tmp / "l.csv");
  CHECK(read_file(tmp / "l.csv") == "object_id,point,group,component\na,1,2,1\na,2,2,2\nb,0,1,0\n");
}

TEST_CASE("report writers emit the documented files and columns") {
  TempDir tmp;
  DiagnosticSeries series;
  series.chains = 2;
  for (std::size_t t = 1; t <= 4; ++t) series.points.push_back({t * 10, t * 20, 1.0, 0.9, 0.5, 0.45, 0.5, 0.45, false});
  const auto diag = write_diagnostics_report(series, tmp / "diag");
  CHECK(diag.size() == 4);
  std::size_t svgs = 0;
  for (const auto& p : diag) {
    CHECK(fs::exists(p));
    svgs += p.extension() == ".svg" ? 1 : 0;
  }
  CHECK(svgs == 3);
  const std::string csv = read_file(tmp / "diag.csv");
  CHECK(csv.rfind("iteration,draws,v_hat,w_c,w_m,w_mw_c,b_m,b_mw_c,sparse_cells\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);

  PrcSummary s;
  s.query = {25, 64, 65, 15.0};
  s.mean = 0.001;
  s.lo = 0.0005;
  s.hi = 0.002;
  s.samples = 3;
  s.values = {0.0005, 0.001, 0.002};
  const auto prc = write_prc_report({s}, 0.003, tmp / "prc");
  CHECK(prc.size() == 2);
  const std::string pcsv = read_file(tmp / "prc.csv");
  CHECK(pcsv.rfind("w,m,n,r0,mean,hpd_lo,hpd_hi,level,samples,clamped,below_threshold\n", 0) == 0);
  CHECK(prc_csv({s}, 0.003).find(",1\n") != std::string::npos);
  CHECK(fs::exists(tmp / "prc_hist_25_64_65.svg"));

  ObjectSelection o;
  o.id = "print1";
  o.ranking.order = {CovStructure::DiagTied, CovStructure::DiagFree, CovStructure::FullTied, CovStructure::FullFree};
  ObjectSelection skipped;
  skipped.id = "tiny";
  skipped.skipped = true;
  skipped.note = "too few points";
  const auto bic_files = write_bic_report({o, skipped}, tmp / "bic");
  CHECK(bic_files.size() == 2);
  const std::string agg = read_file(tmp / "bic_aggregate.csv");
  CHECK(agg.rfind("rank,structure,count,percent\n", 0) == 0);
  CHECK(agg.find("diagonal-tied,1,100") != std::string::npos);
  CHECK(read_file(tmp / "bic_objects.csv").find("tiny") != std::string::npos);

  const std::string svg = svg_histogram("h", {1, 2, 2, 3}, 3, 1.5, 2.5);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
}
