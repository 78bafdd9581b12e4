#include <cstdio>
#include <exception>
#include <string>

#include <omp.h>

#include "CLI11.hpp"

#include "unravel/config.hpp"
#include "unravel/runner.hpp"

namespace {

int do_run(const unravel::ExperimentConfig& cfg) {
  const auto written = unravel::run_experiment(cfg);
  std::printf("wrote %zu files to %s\n", written.size(), cfg.output_dir.c_str());
  return 0;
}

int do_validate(const unravel::ExperimentConfig& cfg) {
  const auto reports = unravel::validate_schemes(cfg);
  bool ok = true;
  for (const auto& r : reports) {
    const bool pass = r.max_residual <= 1e-8;
    ok = ok && pass;
    std::printf("scheme %-14s max residual %.3e  %s\n", r.scheme.c_str(),
                r.max_residual, pass ? "[ok]" : "[FAIL]");
  }
  return ok ? 0 : 3;
}

int do_oracle(const unravel::ExperimentConfig& cfg) {
  const auto written = unravel::export_oracle(cfg);
  std::printf("wrote %zu files to %s\n", written.size(), cfg.output_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic unraveling of Lindblad dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed = 0;
  int threads = 0;
  std::string output_dir;

  CLI::App* run_cmd = app.add_subcommand("run", "run the configured experiment");
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "check scheme residuals on random states");
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "write the exact reference series only");
  for (CLI::App* sub : {run_cmd, validate_cmd, oracle_cmd}) {
    sub->add_option("config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "OpenMP thread count");
    sub->add_option("--output-dir", output_dir, "override the config output_dir");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* active = run_cmd;
  if (app.got_subcommand(validate_cmd)) active = validate_cmd;
  if (app.got_subcommand(oracle_cmd)) active = oracle_cmd;

  try {
    unravel::ExperimentConfig cfg = unravel::load_config(config_path);
    if (active->count("--seed") > 0) cfg.seed = seed;
    if (active->count("--output-dir") > 0) cfg.output_dir = output_dir;
    if (active->count("--threads") > 0) {
      if (threads < 1) {
        throw unravel::ConfigError("--threads must be at least 1");
      }
      omp_set_num_threads(threads);
    }
    if (active == validate_cmd) return do_validate(cfg);
    if (active == oracle_cmd) return do_oracle(cfg);
    return do_run(cfg);
  } catch (const unravel::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const unravel::NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
