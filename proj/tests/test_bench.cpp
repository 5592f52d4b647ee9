#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "diffbbo/bench.hpp"

using namespace diffbbo;
using namespace diffbbo::bench;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/diffbbo_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

RunSettings tiny_settings(const std::string& task) {
  nlohmann::json j;
  j["task"] = task;
  j["seed"] = 3;
  RunSettings settings = parse_settings_json(j);
  settings.iterations = 1;
  settings.batch = 2;
  settings.ensemble = 2;
  settings.pool_size = 32;
  settings.epochs = 0;
  settings.diffusion_steps = 5;
  settings.hidden_dims = {8};
  return settings;
}

optimizer::RunTrajectory synthetic_trajectory(const std::string& method, int iterations) {
  optimizer::RunTrajectory trajectory;
  trajectory.method = method;
  trajectory.seed = 1;
  double best = -2.0;
  for (int k = 1; k <= iterations; ++k) {
    optimizer::IterationRecord r;
    r.k = k;
    r.chosen_w = 0.6 + 0.01 * k;
    r.y_star_norm = 0.1 * k / iterations;
    r.y_star_raw = -1.0 + 0.05 * k;
    r.epistemic = 0.01 / k;
    r.aleatoric = 0.3 + 1e-17;  // exercises shortest-round-trip printing
    best += 0.07;
    r.phi_raw = best;
    r.gap = 1.0 / (k + 1);
    r.oracle_calls = 20L * k;
    trajectory.records.push_back(r);
  }
  return trajectory;
}

}  // namespace

TEST_CASE("parse: minimal config applies the reference defaults") {
  nlohmann::json j;
  j["task"] = "sphere2d";
  j["seed"] = 1;
  const auto s = parse_settings_json(j);
  CHECK(s.iterations == 16);
  CHECK(s.batch == 100);
  CHECK(s.ensemble == 5);
  CHECK(s.weights == std::vector<double>{0.6, 0.7, 0.8, 0.9, 1.0});
  CHECK(s.p_uncond == doctest::Approx(0.15));
  CHECK(s.lr == doctest::Approx(0.001));
  CHECK(s.percentile_lo == doctest::Approx(0.25));
  CHECK(s.percentile_hi == doctest::Approx(0.5));
  CHECK(s.guidance == doctest::Approx(2.0));
}

TEST_CASE("parse: omitting the task names the missing field") {
  nlohmann::json j;
  j["seed"] = 1;
  try {
    parse_settings_json(j);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("task") != std::string::npos);
  }
}

TEST_CASE("parse: unknown task lists the registry") {
  nlohmann::json j;
  j["task"] = "warp9";
  try {
    parse_settings_json(j);
    FAIL("expected invalid_argument");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("sphere8d") != std::string::npos);
  }
}

TEST_CASE("parse: unknown keys are rejected at every level") {
  nlohmann::json j;
  j["task"] = "sphere2d";
  j["batch_siez"] = 12;
  CHECK_THROWS_AS(parse_settings_json(j), std::invalid_argument);

  nlohmann::json nested;
  nested["task"] = "sphere2d";
  nested["train"] = {{"epohcs", 3}};
  CHECK_THROWS_AS(parse_settings_json(nested), std::invalid_argument);
}

TEST_CASE("parse: seed falls back to DIFFBBO_SEED, explicit seed wins") {
  setenv("DIFFBBO_SEED", "99", 1);
  nlohmann::json j;
  j["task"] = "sphere2d";
  CHECK(parse_settings_json(j).seed == 99);
  j["seed"] = 5;
  CHECK(parse_settings_json(j).seed == 5);
  unsetenv("DIFFBBO_SEED");
}

TEST_CASE("parse: write-then-parse round trip is lossless") {
  RunSettings s = tiny_settings("lookup6");
  s.weights = {0.55, 0.8, 1.25};
  s.guidance = 1.75;
  s.selection = "fixed";
  s.fixed_weight = 0.8;
  s.output = "/tmp/somewhere";

  TempFile file("roundtrip.json");
  {
    std::ofstream out(file.path);
    out << to_json(s).dump(2);
  }
  const auto parsed = parse_config(file.path);
  CHECK(parsed == s);
}

TEST_CASE("parse: malformed file reports position info") {
  TempFile file("broken.json");
  {
    std::ofstream out(file.path);
    out << "{\n  \"task\": \"sphere2d\",\n  oops\n}\n";
  }
  try {
    parse_config(file.path);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("/tmp/diffbbo_missing_config.json"), std::runtime_error);
}

TEST_CASE("format_weight: trailing .0 for integral weights") {
  CHECK(format_weight(0.6) == "0.6");
  CHECK(format_weight(1.0) == "1.0");
  CHECK(format_weight(0.75) == "0.75");
  CHECK(format_weight(2.5) == "2.5");
}

TEST_CASE("csv: header is bit-exact and rows count K per method") {
  const std::vector<optimizer::RunTrajectory> trajectories{
      synthetic_trajectory("uae", 16), synthetic_trajectory("random", 16)};
  TempFile file("rows.csv");
  write_results_csv(trajectories, file.path);

  std::ifstream in(file.path);
  std::string header;
  std::getline(in, header);
  CHECK(header == std::string(kCsvHeader));
  int rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) ++rows;
  CHECK(rows == 32);
}

TEST_CASE("csv: re-parse reproduces every field exactly") {
  const std::vector<optimizer::RunTrajectory> trajectories{synthetic_trajectory("uae", 16)};
  TempFile file("exact.csv");
  write_results_csv(trajectories, file.path);
  const auto rows = parse_results_csv(file.path);
  REQUIRE(rows.size() == 16);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = trajectories[0].records[i];
    CHECK(rows[i].iter == r.k);
    CHECK(rows[i].method == "uae");
    CHECK(rows[i].chosen_w == r.chosen_w);  // bit-exact via shortest round trip
    CHECK(rows[i].y_star_norm == r.y_star_norm);
    CHECK(rows[i].y_star_raw == r.y_star_raw);
    CHECK(rows[i].epistemic == r.epistemic);
    CHECK(rows[i].aleatoric == r.aleatoric);
    CHECK(rows[i].best_so_far == r.phi_raw);
    CHECK(rows[i].gap == r.gap);
    CHECK(rows[i].oracle_calls == r.oracle_calls);
  }
  CHECK_THROWS_AS(parse_results_csv("/tmp/diffbbo_missing.csv"), std::runtime_error);
}

TEST_CASE("csv: best_so_far is nondecreasing within each emitted method") {
  const auto settings = tiny_settings("sphere2d");
  const auto trajectories = run_ablation(settings, {0.8});
  TempFile file("monotone.csv");
  write_results_csv(trajectories, file.path);
  const auto rows = parse_results_csv(file.path);
  double last = -1e300;
  std::string method;
  for (const auto& row : rows) {
    if (row.method != method) {
      method = row.method;
      last = -1e300;
    }
    CHECK(row.best_so_far >= last);
    last = row.best_so_far;
  }
}

TEST_CASE("run_ablation: emits uae, each fixed weight, and random") {
  const auto settings = tiny_settings("sphere2d");
  const auto trajectories = run_ablation(settings, {0.6, 0.8, 1.0});
  std::set<std::string> methods;
  for (const auto& t : trajectories) methods.insert(t.method);
  CHECK(methods ==
        std::set<std::string>{"uae", "fixed-0.6", "fixed-0.8", "fixed-1.0", "random"});
}

TEST_CASE("results json: run_stamp is the only run-dependent field") {
  const auto settings = tiny_settings("sphere2d");
  const std::vector<optimizer::RunTrajectory> trajectories{synthetic_trajectory("uae", 4)};
  const auto diagnostic = run_moment_diagnostic(3, 10000, 2);

  TempFile a("meta_a.json"), b("meta_b.json");
  write_results_json(settings, trajectories, diagnostic, 1.25, "2026-01-01T00:00:00Z", a.path);
  write_results_json(settings, trajectories, diagnostic, 9.75, "2026-01-02T00:00:00Z", b.path);

  std::ifstream ia(a.path), ib(b.path);
  auto ja = nlohmann::json::parse(ia);
  auto jb = nlohmann::json::parse(ib);
  CHECK(ja != jb);
  ja.erase("run_stamp");
  jb.erase("run_stamp");
  CHECK(ja == jb);
  CHECK(ja["config"]["task"] == "sphere2d");
  CHECK(ja["moment_diagnostic"]["all_pass"].get<bool>());
}
