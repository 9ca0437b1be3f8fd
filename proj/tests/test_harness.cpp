#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "qftlab/harness.hpp"
#include "qftlab/io.hpp"

using namespace qftlab;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kConfigDir = std::string(QFTLAB_SOURCE_DIR) + "/configs";

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("a shipped config parses and validates") {
    const ExperimentConfig cfg = load_config(kConfigDir + "/quartic_smoke.json");
    CHECK(cfg.label == "quartic_smoke");
    CHECK(cfg.truncation.n_max == 4);
    CHECK(cfg.polynomial.size() == 5);
    CHECK(!cfg.checks.empty());
  }

  SUBCASE("malformed JSON is a config error") {
    CHECK_THROWS_AS(parse_config("{ not json"), ConfigInvalid);
  }

  SUBCASE("field errors carry the field path") {
    try {
      parse_config(R"({"truncation": {"mass": "heavy"}})");
      FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
      CHECK(std::string(e.what()).find("truncation.mass") != std::string::npos);
    }
  }

  SUBCASE("unknown fields and checks are rejected") {
    CHECK_THROWS_AS(parse_config(R"({"no_such_field": 1})"), ConfigInvalid);
    CHECK_THROWS_AS(parse_config(R"({"checks": ["bogus_check"]})"), ConfigInvalid);
  }

  SUBCASE("invalid physics is rejected with a path") {
    try {
      parse_config(R"({"truncation": {"mass": -2.0}})");
      FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
      CHECK(std::string(e.what()).find("mass") != std::string::npos);
    }
  }
}

TEST_CASE("determinism of reports") {
  const ExperimentConfig cfg = load_config(kConfigDir + "/free_minimal.json");
  const auto dir1 = std::filesystem::temp_directory_path() / "qftlab_det_a";
  const auto dir2 = std::filesystem::temp_directory_path() / "qftlab_det_b";
  run_experiment(cfg, dir1.string());
  run_experiment(cfg, dir2.string());
  CHECK(read_file(dir1.string() + "/report.json") == read_file(dir2.string() + "/report.json"));
}

TEST_CASE("every registered check is covered by a shipped config") {
  std::set<std::string> covered;
  for (const auto& name :
       {"quartic_smoke.json", "free_minimal.json", "convergence.json", "bogoliubov.json"}) {
    const ExperimentConfig cfg = load_config(kConfigDir + "/" + name);
    covered.insert(cfg.checks.begin(), cfg.checks.end());
  }
  for (const auto& check : registered_checks()) {
    INFO("check: ", check);
    CHECK(covered.count(check) == 1);
  }
}

TEST_CASE("report round trip through the validator") {
  const ExperimentConfig cfg = load_config(kConfigDir + "/free_minimal.json");
  const auto dir = std::filesystem::temp_directory_path() / "qftlab_check";
  const RunReport report = run_experiment(cfg, dir.string());
  CHECK(report.all_pass());
  CHECK(check_report(dir.string() + "/report.json") == 0);

  SUBCASE("tampered values are caught") {
    std::string text = read_file(dir.string() + "/report.json");
    const auto pos = text.find("\"pass\": true");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"pass\": false");
    const auto bad = dir / "tampered.json";
    std::ofstream(bad.string()) << text;
    CHECK(check_report(bad.string()) == 2);  // value/pass mismatch
  }

  SUBCASE("garbage reports are malformed") {
    const auto bad = dir / "garbage.json";
    std::ofstream(bad.string()) << "{\"checks\": [{\"name\": 1}]}";
    CHECK(check_report(bad.string()) == 2);
    CHECK(check_report((dir / "missing.json").string()) == 2);
  }
}

TEST_CASE("single-value sweep degenerates to run") {
  ExperimentConfig cfg = load_config(kConfigDir + "/free_minimal.json");
  const auto dir = std::filesystem::temp_directory_path() / "qftlab_sweep";
  const SweepResult sweep = run_sweep(cfg, "amplitude", {1.0}, dir.string());
  CHECK(sweep.values.size() == 1);
  REQUIRE(sweep.observables.size() == 1);
  const RunReport direct = run_experiment(cfg, (dir / "direct").string());
  for (const auto& c : direct.checks) {
    REQUIRE(sweep.observables[0].count(c.name) == 1);
    CHECK(sweep.observables[0].at(c.name) == doctest::Approx(c.value).epsilon(1e-14));
  }
  CHECK(std::filesystem::exists(sweep.csv_path));
}

TEST_CASE("sweep validates its axis") {
  const ExperimentConfig cfg = load_config(kConfigDir + "/free_minimal.json");
  const auto dir = std::filesystem::temp_directory_path() / "qftlab_sweep_bad";
  CHECK_THROWS_AS(run_sweep(cfg, "volume", {1.0}, dir.string()), ConfigInvalid);
  CHECK_THROWS_AS(run_sweep(cfg, "dt", {}, dir.string()), ConfigInvalid);
}

TEST_CASE("truncation and level axes rebuild the model per point") {
  ExperimentConfig cfg = load_config(kConfigDir + "/free_minimal.json");
  const auto dir = std::filesystem::temp_directory_path() / "qftlab_axes";
  const SweepResult nm = run_sweep(cfg, "n_max", {2.0, 3.0}, (dir / "n").string());
  CHECK(nm.observables.size() == 2);
  const SweepResult kk = run_sweep(cfg, "K", {1.0, 2.0}, (dir / "k").string());
  CHECK(kk.observables.size() == 2);
  const SweepResult lv = run_sweep(cfg, "approx_level", {3.0, 5.0}, (dir / "l").string());
  CHECK(lv.observables.size() == 2);
  for (const auto& obs : {nm.observables, kk.observables, lv.observables})
    for (const auto& point : obs) CHECK(point.at("free_theory_trivial") == 0.0);
}

TEST_CASE("worker pools do not change the report") {
  ExperimentConfig cfg = load_config(kConfigDir + "/free_minimal.json");
  cfg.checks = {"free_theory_trivial", "vacuum_wick_expectation", "kato_stability"};
  const auto dir1 = std::filesystem::temp_directory_path() / "qftlab_w1";
  const auto dir2 = std::filesystem::temp_directory_path() / "qftlab_w2";
  run_experiment(cfg, dir1.string(), 1);
  run_experiment(cfg, dir2.string(), 3);
  CHECK(read_file(dir1.string() + "/report.json") == read_file(dir2.string() + "/report.json"));
}

TEST_CASE("dimension cap override through the environment") {
  const ExperimentConfig cfg = load_config(kConfigDir + "/quartic_smoke.json");
  REQUIRE(setenv("QFTLAB_DIM_CAP", "10", 1) == 0);
  CHECK_THROWS_AS(build_basis(cfg.truncation), DimensionCapExceeded);
  REQUIRE(unsetenv("QFTLAB_DIM_CAP") == 0);
  CHECK_NOTHROW(build_basis(cfg.truncation));
}

TEST_CASE("dt sweep recovers the midpoint order") {
  ExperimentConfig cfg = load_config(kConfigDir + "/convergence.json");
  cfg.checks = {"midpoint_step_doubling"};
  const auto dir = std::filesystem::temp_directory_path() / "qftlab_sweep_dt";
  const SweepResult sweep = run_sweep(cfg, "dt", {0.02, 0.01, 0.005}, dir.string(), 2);
  REQUIRE(sweep.slopes.count("midpoint_step_doubling") == 1);
  CHECK(std::abs(sweep.slopes.at("midpoint_step_doubling") - 2.0) < 0.2);
}

TEST_CASE("matrix dump round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "qftlab_io";
  std::filesystem::create_directories(dir);
  Matrix m(2, 3);
  m << Complex(1.0, -2.0), Complex(0.0, 0.5), Complex(3.0, 0.0), Complex(-1.0, 1.0),
      Complex(0.25, 0.0), Complex(0.0, -0.125);
  const std::string path = (dir / "m.qlmd").string();
  dump_matrix(path, m, 0xabcdef);
  std::uint64_t hash = 0;
  const Matrix back = load_matrix(path, &hash);
  CHECK(hash == 0xabcdef);
  CHECK((back - m).norm() == 0.0);
  dump_matrix_csv((dir / "m.csv").string(), m, 0xabcdef);
  CHECK(std::filesystem::file_size(dir / "m.csv") > 0);
}

TEST_CASE("17-digit float formatting round-trips") {
  for (Real v : {1.0 / 3.0, 2.718281828459045e-12, -0.1, 12345.678901234567}) {
    CHECK(std::stod(format_real17(v)) == v);
  }
}
