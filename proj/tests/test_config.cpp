#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "test_util.hpp"
#include "unravel/config.hpp"
#include "unravel/core.hpp"
#include "unravel/models.hpp"
#include "unravel/oracle.hpp"
#include "unravel/runner.hpp"

using namespace unravel;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("unravel_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string minimal_config(const std::string& output_dir = "out") {
  return R"({
    "schema": 1,
    "model": {"name": "decay2d"},
    "schemes": [{"name": "rqsd"}],
    "observables": [{"name": "sigma_z"}],
    "initial_state": {"name": "plus"},
    "dt": 1e-3,
    "t_final": 0.01,
    "n_samples": 10,
    "output_dir": ")" + output_dir + R"("
  })";
}

// parse, patch one top-level field, reserialize; keeps the test JSON readable
std::string with_field(const std::string& base, const std::string& key,
                       const std::string& value_json) {
  auto j = nlohmann::json::parse(base);
  j[key] = nlohmann::json::parse(value_json);
  return j.dump();
}

std::vector<std::vector<double>> read_csv(const fs::path& path,
                                          const std::string& expected_header) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  REQUIRE(std::getline(in, line));
  REQUIRE(line == expected_header);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_CASE("parse_config reads the minimal document and applies defaults") {
  const ExperimentConfig cfg = parse_config(minimal_config());
  CHECK(cfg.model.name == "decay2d");
  CHECK(cfg.model.decay.lambda0 == 5.0);
  CHECK(cfg.model.decay.nu == 0.5);
  REQUIRE(cfg.schemes.size() == 1);
  CHECK(cfg.schemes[0].name == "rqsd");
  REQUIRE(cfg.observables.size() == 1);
  CHECK(cfg.observables[0].label == "sigma_z");
  CHECK(cfg.initial_state.name == "plus");
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.t_final == 0.01);
  CHECK(cfg.n_samples == 10);
  CHECK(cfg.n_repeats == 1);
  CHECK(cfg.seed == 1);
  CHECK(cfg.output_dir == "out");
}

TEST_CASE("parse_config accepts explicit params and custom pieces") {
  const std::string text = R"({
    "schema": 1,
    "model": {"name": "decay2d", "params": {"lambda0": 2.0, "nu": 0.25}},
    "schemes": [{"name": "do_qjp", "rate_cap": 12.5}, {"name": "qjp"}],
    "observables": [
      {"name": "sigma_z", "label": "z"},
      {"name": "custom", "label": "proj", "matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]}
    ],
    "initial_state": {"amplitudes": [[0.6,0],[0,0.8]]},
    "dt": 0.01,
    "t_final": 0.1,
    "n_samples": 4,
    "n_repeats": 3,
    "seed": 99,
    "output_dir": "elsewhere"
  })";
  const ExperimentConfig cfg = parse_config(text);
  CHECK(cfg.model.decay.lambda0 == 2.0);
  CHECK(cfg.model.decay.nu == 0.25);
  CHECK(cfg.schemes[0].rate_cap == 12.5);
  CHECK(cfg.schemes[1].name == "qjp");
  CHECK(cfg.observables[0].label == "z");
  CHECK(cfg.observables[1].matrix(0, 0) == cplx(1.0, 0.0));
  CHECK(cfg.initial_state.name == "amplitudes");
  CHECK(cfg.initial_state.amplitudes[1] == cplx(0.0, 0.8));
  CHECK(cfg.n_repeats == 3);
  CHECK(cfg.seed == 99);
  CHECK(cfg.output_dir == "elsewhere");
}

TEST_CASE("parse_config rejects malformed documents") {
  const std::string base = minimal_config();
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "schema", "2")), ConfigError);

  auto drop = [&](const char* key) {
    auto j = nlohmann::json::parse(base);
    j.erase(key);
    return j.dump();
  };
  CHECK_THROWS_AS(parse_config(drop("schema")), ConfigError);
  CHECK_THROWS_AS(parse_config(drop("model")), ConfigError);
  CHECK_THROWS_AS(parse_config(drop("schemes")), ConfigError);
  CHECK_THROWS_AS(parse_config(drop("observables")), ConfigError);
  CHECK_THROWS_AS(parse_config(drop("initial_state")), ConfigError);
  CHECK_THROWS_AS(parse_config(drop("dt")), ConfigError);

  CHECK_THROWS_AS(parse_config(with_field(base, "model", R"({"name": "qubitz"})")),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "schemes", R"([{"name": "euler"}])")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "schemes", "[]")), ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "schemes", R"([{"name": "do_qjp"}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "schemes",
                              R"([{"name": "do_qjp", "rate_cap": 0.0}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "observables", R"([{"name": "energy"}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "observables",
                              R"([{"name": "sigma_z"}, {"name": "sigma_z"}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "observables", R"([{"name": "custom"}])")),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config(with_field(base, "initial_state", R"({"name": "minus"})")),
      ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "dt", "0.0")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "dt", "-0.001")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "t_final", "0.0")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "n_samples", "0")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "n_repeats", "0")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "seed", "-4")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_field(base, "n_samples", "2.5")), ConfigError);
}

TEST_CASE("load_config reports missing files") {
  CHECK_THROWS_AS(load_config("/nonexistent/path/config.json"), ConfigError);
}

TEST_CASE("build_model constructs each family") {
  ModelSpec decay;
  decay.name = "decay2d";
  CHECK(build_model(decay).dim == 2);

  ModelSpec cavity;
  cavity.name = "cavity_qed";
  CHECK(build_model(cavity).dim == 20);

  ModelSpec custom;
  custom.name = "custom";
  custom.hamiltonian = pauli_z();
  custom.lindblad_ops = {sigma_minus()};
  const LindbladModel m = build_model(custom);
  CHECK(m.dim == 2);
  REQUIRE(m.lindblad_ops.size() == 1);
  CHECK(m.lindblad_ops[0](1, 0) == cplx(1.0, 0.0));

  ModelSpec bad;
  bad.name = "custom";
  bad.hamiltonian = sigma_plus();  // not Hermitian
  CHECK_THROWS_AS(build_model(bad), ConfigError);
}

TEST_CASE("build_observables places operators by model kind") {
  SUBCASE("qubit models use the bare Pauli matrices") {
    const ExperimentConfig cfg = parse_config(minimal_config());
    const LindbladModel m = build_model(cfg.model);
    ExperimentConfig two = cfg;
    two.observables = {{"sigma_x", "x", CMatrix{}}, {"sigma_z", "z", CMatrix{}}};
    const auto obs = build_observables(two, m);
    REQUIRE(obs.size() == 2);
    CHECK(tst::mat_max_abs_diff(obs[0].mat, pauli_x()) == 0.0);
    CHECK(tst::mat_max_abs_diff(obs[1].mat, pauli_z()) == 0.0);
  }

  SUBCASE("cavity models lift sigma to the atom and number to the field") {
    ExperimentConfig cfg = parse_config(minimal_config());
    cfg.model.name = "cavity_qed";
    cfg.initial_state.name = "plus_vacuum";
    cfg.observables = {{"sigma_z", "sz", CMatrix{}}, {"number", "n", CMatrix{}}};
    const LindbladModel m = build_model(cfg.model);
    const auto obs = build_observables(cfg, m);
    REQUIRE(obs.size() == 2);
    CHECK(obs[0].mat.rows == 20);
    CHECK(obs[0].mat(0, 0) == cplx(1.0, 0.0));
    CHECK(obs[0].mat(9, 9) == cplx(1.0, 0.0));
    CHECK(obs[0].mat(10, 10) == cplx(-1.0, 0.0));
    CHECK(obs[1].mat(1, 1) == cplx(1.0, 0.0));
    CHECK(obs[1].mat(9, 9) == cplx(9.0, 0.0));
    CHECK(obs[1].mat(10, 10) == cplx(0.0, 0.0));
    CHECK(obs[1].mat(11, 11) == cplx(1.0, 0.0));
  }

  SUBCASE("misplaced observables are rejected") {
    ExperimentConfig cfg = parse_config(minimal_config());
    const LindbladModel m = build_model(cfg.model);
    cfg.observables = {{"number", "n", CMatrix{}}};
    CHECK_THROWS_AS(build_observables(cfg, m), ConfigError);
    cfg.observables = {{"custom", "c", CMatrix::identity(3)}};
    CHECK_THROWS_AS(build_observables(cfg, m), ConfigError);
    cfg.observables = {{"custom", "c", sigma_plus()}};
    CHECK_THROWS_AS(build_observables(cfg, m), ConfigError);
  }
}

TEST_CASE("build_initial_state") {
  ExperimentConfig cfg = parse_config(minimal_config());
  const LindbladModel decay = build_model(cfg.model);

  SUBCASE("named qubit states") {
    cfg.initial_state.name = "zero";
    CHECK(tst::max_abs_diff(build_initial_state(cfg, decay), basis_state(2, 0)) == 0.0);
    cfg.initial_state.name = "one";
    CHECK(tst::max_abs_diff(build_initial_state(cfg, decay), basis_state(2, 1)) == 0.0);
    cfg.initial_state.name = "plus";
    CHECK(tst::max_abs_diff(build_initial_state(cfg, decay), plus_state()) <= 1e-16);
  }

  SUBCASE("amplitudes must be the right length and nearly normalized") {
    cfg.initial_state.name = "amplitudes";
    cfg.initial_state.amplitudes = {cplx(0.6, 0.0), cplx(0.0, 0.8)};
    const StateVector psi = build_initial_state(cfg, decay);
    CHECK(vnorm(psi) == doctest::Approx(1.0).epsilon(1e-14));
    cfg.initial_state.amplitudes = {cplx(1.0, 0.0), cplx(1.0, 0.0)};
    CHECK_THROWS_AS(build_initial_state(cfg, decay), ConfigError);
    cfg.initial_state.amplitudes = {cplx(1.0, 0.0)};
    CHECK_THROWS_AS(build_initial_state(cfg, decay), ConfigError);
  }

  SUBCASE("plus_vacuum needs the cavity model") {
    cfg.initial_state.name = "plus_vacuum";
    CHECK_THROWS_AS(build_initial_state(cfg, decay), ConfigError);
    ExperimentConfig cav = cfg;
    cav.model.name = "cavity_qed";
    const LindbladModel m = build_model(cav.model);
    const StateVector psi = build_initial_state(cav, m);
    REQUIRE(psi.size() == 20);
    CHECK(psi[0] == cplx(1.0 / std::sqrt(2.0), 0.0));
    CHECK(psi[10] == cplx(1.0 / std::sqrt(2.0), 0.0));
    CHECK(std::abs(psi[1]) == 0.0);

    cav.initial_state.name = "plus";
    CHECK_THROWS_AS(build_initial_state(cav, m), ConfigError);
  }
}

TEST_CASE("build_grid checks divisibility") {
  ExperimentConfig cfg = parse_config(minimal_config());
  const TimeGrid grid = build_grid(cfg);
  CHECK(grid.n_steps == 10);
  CHECK(grid.dt == 1e-3);
  cfg.t_final = 0.0105;
  CHECK_THROWS_AS(build_grid(cfg), ConfigError);
}

TEST_CASE("validate_schemes reports one residual per configured scheme") {
  ExperimentConfig cfg = parse_config(minimal_config());
  cfg.schemes = {{"lqsd", 0.0}, {"rqsd", 0.0}, {"cqsd", 0.0},   {"do_qsd", 0.0},
                 {"multi_do_qsd", 0.0}, {"qjp", 0.0}, {"do_qjp", 10.0}};
  const auto reports = validate_schemes(cfg);
  REQUIRE(reports.size() == 7);
  for (size_t i = 0; i < reports.size(); ++i) {
    CHECK(reports[i].scheme == cfg.schemes[i].name);
    CHECK(reports[i].max_residual <= 1e-10);
  }
}

TEST_CASE("export_oracle writes the exact series") {
  TempDir tmp("oracle");
  ExperimentConfig cfg = parse_config(minimal_config(tmp.str()));
  cfg.observables = {{"sigma_x", "sigma_x", CMatrix{}}, {"sigma_z", "sigma_z", CMatrix{}}};
  cfg.dt = 0.01;
  cfg.t_final = 0.5;
  const auto written = export_oracle(cfg);
  REQUIRE(written.size() == 2);
  CHECK(fs::path(written[0]).filename() == "oracle_sigma_x.csv");
  CHECK(fs::path(written[1]).filename() == "oracle_sigma_z.csv");

  const auto rows_x = read_csv(written[0], "t,exact");
  const auto rows_z = read_csv(written[1], "t,exact");
  REQUIRE(rows_x.size() == 51);
  for (size_t i = 0; i < rows_x.size(); ++i) {
    const double t = rows_x[i][0];
    CHECK(t == doctest::Approx(0.01 * static_cast<double>(i)).epsilon(1e-12));
    CHECK(std::abs(rows_x[i][1] - std::exp(-5.0 * t)) <= 1e-7);
    CHECK(std::abs(rows_z[i][1] + 0.5 * (1.0 - std::exp(-10.0 * t))) <= 1e-7);
  }
}

TEST_CASE("run_experiment writes per-repeat series and a summary") {
  TempDir tmp("run");
  ExperimentConfig cfg = parse_config(minimal_config(tmp.str()));
  cfg.schemes = {{"rqsd", 0.0}, {"do_qsd", 0.0}};
  cfg.observables = {{"sigma_x", "sigma_x", CMatrix{}}, {"sigma_z", "sigma_z", CMatrix{}}};
  cfg.dt = 1e-3;
  cfg.t_final = 0.02;
  cfg.n_samples = 50;
  cfg.n_repeats = 2;
  cfg.seed = 7;

  const auto written = run_experiment(cfg);
  // 2 schemes x 2 observables x 2 repeats + summary
  REQUIRE(written.size() == 9);
  const std::vector<std::string> expected{
      "rqsd_sigma_x_rep0.csv", "rqsd_sigma_x_rep1.csv", "rqsd_sigma_z_rep0.csv",
      "rqsd_sigma_z_rep1.csv", "do_qsd_sigma_x_rep0.csv", "do_qsd_sigma_x_rep1.csv",
      "do_qsd_sigma_z_rep0.csv", "do_qsd_sigma_z_rep1.csv", "summary.json"};
  for (const auto& name : expected) {
    CHECK(fs::exists(tmp.path / name));
  }

  SUBCASE("series files carry consistent columns") {
    const auto rows = read_csv(tmp.path / "rqsd_sigma_z_rep0.csv",
                               "t,mean,est_var,exact,abs_error");
    REQUIRE(rows.size() == 21);
    CHECK(rows[0][0] == 0.0);
    CHECK(rows[0][1] == doctest::Approx(0.0).epsilon(1e-12));  // <sigma_z> at plus
    CHECK(rows[0][2] <= 1e-20);
    CHECK(rows[0][3] == doctest::Approx(0.0).epsilon(1e-12));
    for (const auto& row : rows) {
      REQUIRE(row.size() == 5);
      CHECK(row[4] == doctest::Approx(std::abs(row[1] - row[3])).epsilon(1e-12));
      CHECK(row[2] >= 0.0);
    }
  }

  SUBCASE("summary aggregates the repeats faithfully") {
    const auto summary = nlohmann::json::parse(slurp(tmp.path / "summary.json"));
    CHECK(summary.at("schema").get<int>() == 1);
    CHECK(summary.at("model").get<std::string>() == "decay2d");
    CHECK(summary.at("dt").get<double>() == 1e-3);
    CHECK(summary.at("n_samples").get<int>() == 50);
    CHECK(summary.at("n_repeats").get<int>() == 2);
    CHECK(summary.at("seed").get<uint64_t>() == 7);
    const auto& results = summary.at("results");
    REQUIRE(results.size() == 4);
    CHECK(results[0].at("scheme") == "rqsd");
    CHECK(results[0].at("observable") == "sigma_x");
    CHECK(results[3].at("scheme") == "do_qsd");
    CHECK(results[3].at("observable") == "sigma_z");
    for (const auto& r : results) {
      const auto errors = r.at("errors").get<std::vector<double>>();
      REQUIRE(errors.size() == 2);
      const double med = 0.5 * (errors[0] + errors[1]);
      CHECK(r.at("median_error").get<double>() == doctest::Approx(med).epsilon(1e-12));
      const auto vars = r.at("variances").get<std::vector<double>>();
      REQUIRE(vars.size() == 2);
      CHECK(r.at("variance_box").at("min").get<double>() ==
            doctest::Approx(std::min(vars[0], vars[1])).epsilon(1e-12));
    }
  }

  SUBCASE("reruns and thread counts reproduce the bytes") {
    const std::string first = slurp(tmp.path / "rqsd_sigma_z_rep0.csv");
    const std::string first_summary = slurp(tmp.path / "summary.json");

    TempDir tmp2("run_again");
    ExperimentConfig again = cfg;
    again.output_dir = tmp2.str();
    omp_set_num_threads(1);
    run_experiment(again);
    omp_set_num_threads(4);
    CHECK(slurp(tmp2.path / "rqsd_sigma_z_rep0.csv") == first);
    CHECK(slurp(tmp2.path / "summary.json") == first_summary);
  }
}

TEST_CASE("run_experiment rejects single-sample runs") {
  TempDir tmp("single");
  ExperimentConfig cfg = parse_config(minimal_config(tmp.str()));
  cfg.n_samples = 1;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("run_experiment removes partial output on failure") {
  TempDir tmp("cleanup");
  ExperimentConfig cfg = parse_config(minimal_config(tmp.str()));
  cfg.schemes = {{"rqsd", 0.0}, {"qjp", 0.0}};
  cfg.initial_state.name = "zero";
  cfg.dt = 0.1;
  cfg.t_final = 0.5;
  cfg.n_samples = 4;
  CHECK_THROWS_AS(run_experiment(cfg), NumericError);
  int leftovers = 0;
  for (const auto& entry : fs::directory_iterator(tmp.path)) {
    (void)entry;
    ++leftovers;
  }
  CHECK(leftovers == 0);
}
