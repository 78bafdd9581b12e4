#include "unravel/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <utility>

#include "json.hpp"

#include "unravel/diffusion.hpp"
#include "unravel/jump.hpp"
#include "unravel/oracle.hpp"

namespace unravel {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// one ensemble to run: either a diffusion or a jump scheme, measuring a
// subset of the configured observables
struct BuiltScheme {
  std::string file_tag;
  bool is_jump = false;
  DiffusionScheme diffusion;
  JumpScheme jump;
  std::vector<int> obs_indices;
};

std::vector<int> all_indices(size_t n) {
  std::vector<int> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = static_cast<int>(i);
  return idx;
}

std::vector<BuiltScheme> build_schemes(const ExperimentConfig& cfg,
                                       const LindbladModel& model,
                                       const std::vector<Observable>& observables) {
  std::vector<BuiltScheme> out;
  for (const auto& spec : cfg.schemes) {
    if (spec.name == "lqsd" || spec.name == "rqsd" || spec.name == "cqsd") {
      BuiltScheme bs;
      bs.file_tag = spec.name;
      if (spec.name == "lqsd") bs.diffusion = make_lqsd(model);
      else if (spec.name == "rqsd") bs.diffusion = make_rqsd(model);
      else bs.diffusion = make_cqsd(model);
      bs.obs_indices = all_indices(observables.size());
      out.push_back(std::move(bs));
    } else if (spec.name == "multi_do_qsd") {
      BuiltScheme bs;
      bs.file_tag = spec.name;
      std::vector<CMatrix> mats;
      for (const auto& o : observables) mats.push_back(o.mat);
      bs.diffusion = make_multi_do_qsd(model, mats);
      bs.obs_indices = all_indices(observables.size());
      out.push_back(std::move(bs));
    } else if (spec.name == "qjp") {
      BuiltScheme bs;
      bs.file_tag = spec.name;
      bs.is_jump = true;
      bs.jump = make_qjp(model);
      bs.obs_indices = all_indices(observables.size());
      out.push_back(std::move(bs));
    } else if (spec.name == "do_qsd") {
      for (size_t i = 0; i < observables.size(); ++i) {
        BuiltScheme bs;
        bs.file_tag = spec.name;
        bs.diffusion = make_do_qsd(model, observables[i].mat);
        bs.obs_indices = {static_cast<int>(i)};
        out.push_back(std::move(bs));
      }
    } else if (spec.name == "do_qjp") {
      for (size_t i = 0; i < observables.size(); ++i) {
        BuiltScheme bs;
        bs.file_tag = spec.name;
        bs.is_jump = true;
        bs.jump = make_do_qjp(model, observables[i].mat, spec.rate_cap);
        bs.obs_indices = {static_cast<int>(i)};
        out.push_back(std::move(bs));
      }
    } else {
      throw ConfigError("run_experiment: unknown scheme '" + spec.name + "'");
    }
  }
  return out;
}

std::string sanitize(const std::string& label) {
  std::string s = label;
  for (auto& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return s;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_file(const fs::path& path, const std::string& body,
                std::vector<std::string>& written) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot write '" + path.string() + "'");
  }
  out << body;
  out.close();
  if (!out) {
    throw ConfigError("failed writing '" + path.string() + "'");
  }
  written.push_back(path.string());
}

struct Prepared {
  LindbladModel model;
  std::vector<Observable> observables;
  StateVector psi0;
  TimeGrid grid;
};

Prepared prepare(const ExperimentConfig& cfg) {
  Prepared p;
  p.model = build_model(cfg.model);
  p.observables = build_observables(cfg, p.model);
  p.psi0 = build_initial_state(cfg, p.model);
  p.grid = build_grid(cfg);
  return p;
}

std::vector<std::vector<double>> oracle_series(const Prepared& p) {
  const auto states = propagate_exact(p.model, outer(p.psi0, p.psi0), p.grid);
  std::vector<std::vector<double>> exact;
  exact.reserve(p.observables.size());
  for (const auto& o : p.observables) {
    exact.push_back(trace_series(states, o.mat));
  }
  return exact;
}

json box_to_json(const BoxplotSummary& b) {
  return json{{"min", b.min}, {"q1", b.q1},   {"median", b.median},
              {"q3", b.q3},   {"max", b.max}};
}

}  // namespace

std::vector<SchemeReport> validate_schemes(const ExperimentConfig& cfg) {
  const Prepared p = prepare(cfg);
  const auto built = build_schemes(cfg, p.model, p.observables);
  std::map<std::string, double> worst;
  for (const auto& spec : cfg.schemes) worst[spec.name] = 0.0;
  constexpr uint64_t kSeed = 424242;
  for (const auto& bs : built) {
    double r = 0.0;
    for (uint64_t i = 0; i < 100; ++i) {
      const StateVector psi = random_unit_state(p.model.dim, kSeed, i);
      const double resid = bs.is_jump ? check_jump(p.model, bs.jump, psi)
                                      : check_unraveling(p.model, bs.diffusion, psi);
      r = std::max(r, resid);
    }
    worst[bs.file_tag] = std::max(worst[bs.file_tag], r);
  }
  std::vector<SchemeReport> reports;
  for (const auto& spec : cfg.schemes) {
    reports.push_back({spec.name, worst[spec.name]});
  }
  return reports;
}

std::vector<std::string> export_oracle(const ExperimentConfig& cfg) {
  const Prepared p = prepare(cfg);
  const auto exact = oracle_series(p);
  fs::create_directories(cfg.output_dir);
  std::vector<std::string> written;
  try {
    for (size_t i = 0; i < p.observables.size(); ++i) {
      std::string body = "t,exact\n";
      for (int j = 0; j < p.grid.points(); ++j) {
        body += fmt(p.grid.time(j));
        body += ',';
        body += fmt(exact[i][j]);
        body += '\n';
      }
      write_file(fs::path(cfg.output_dir) /
                     ("oracle_" + sanitize(p.observables[i].label) + ".csv"),
                 body, written);
    }
  } catch (...) {
    for (const auto& f : written) fs::remove(f);
    throw;
  }
  return written;
}

std::vector<std::string> run_experiment(const ExperimentConfig& cfg) {
  if (cfg.n_samples < 2) {
    throw ConfigError("run_experiment: n_samples must be at least 2 for the "
                      "variance estimate");
  }
  const Prepared p = prepare(cfg);
  const auto built = build_schemes(cfg, p.model, p.observables);
  const auto exact = oracle_series(p);
  fs::create_directories(cfg.output_dir);
  std::vector<std::string> written;
  try {
    // (scheme, label) -> per-repeat metric lists, in first-appearance order
    std::vector<std::pair<std::string, std::string>> result_keys;
    std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>,
                                                            std::vector<double>>>
        collected;
    uint64_t stream_offset = 0;
    for (const auto& bs : built) {
      std::vector<Observable> subset;
      for (int g : bs.obs_indices) subset.push_back(p.observables[g]);
      for (int rep = 0; rep < cfg.n_repeats; ++rep) {
        const EnsembleMoments moments =
            bs.is_jump ? accumulate_ensemble(bs.jump, p.psi0, p.grid, subset,
                                             cfg.n_samples, cfg.seed, stream_offset)
                       : accumulate_ensemble(bs.diffusion, p.psi0, p.grid, subset,
                                             cfg.n_samples, cfg.seed, stream_offset);
        stream_offset += static_cast<uint64_t>(cfg.n_samples);
        for (size_t s = 0; s < subset.size(); ++s) {
          const int g = bs.obs_indices[s];
          const EstimateSeries series =
              estimate_series(moments, static_cast<int>(s), exact[g]);
          const Metrics m = metrics(series);
          const double n = static_cast<double>(series.n_samples);
          std::string body = "t,mean,est_var,exact,abs_error\n";
          for (int i = 0; i < p.grid.points(); ++i) {
            const double est_var = series.variance[i] / (n - 1.0);
            body += fmt(p.grid.time(i));
            body += ',';
            body += fmt(series.mean[i]);
            body += ',';
            body += fmt(est_var);
            body += ',';
            body += fmt(series.exact[i]);
            body += ',';
            body += fmt(std::abs(series.mean[i] - series.exact[i]));
            body += '\n';
          }
          write_file(fs::path(cfg.output_dir) /
                         (bs.file_tag + "_" + sanitize(subset[s].label) + "_rep" +
                          std::to_string(rep) + ".csv"),
                     body, written);
          const auto key = std::make_pair(bs.file_tag, subset[s].label);
          auto it = collected.find(key);
          if (it == collected.end()) {
            result_keys.push_back(key);
            it = collected.emplace(key, std::make_pair(std::vector<double>{},
                                                       std::vector<double>{}))
                     .first;
          }
          it->second.first.push_back(m.trajectory_error);
          it->second.second.push_back(m.averaged_var);
        }
      }
    }
    json results = json::array();
    for (const auto& key : result_keys) {
      const auto& lists = collected.at(key);
      const RunSummary rs =
          summarize_runs(key.first, key.second, lists.first, lists.second);
      results.push_back(json{{"scheme", rs.scheme_id},
                             {"observable", rs.observable},
                             {"errors", rs.errors},
                             {"variances", rs.variances},
                             {"error_box", box_to_json(rs.error_box)},
                             {"variance_box", box_to_json(rs.variance_box)},
                             {"median_error", rs.median_error},
                             {"median_variance", rs.median_variance}});
    }
    const json summary = {
        {"schema", 1},          {"model", cfg.model.name},
        {"dt", cfg.dt},         {"t_final", cfg.t_final},
        {"n_samples", cfg.n_samples}, {"n_repeats", cfg.n_repeats},
        {"seed", cfg.seed},     {"results", results}};
    write_file(fs::path(cfg.output_dir) / "summary.json", summary.dump(2) + "\n",
               written);
  } catch (...) {
    for (const auto& f : written) fs::remove(f);
    throw;
  }
  return written;
}

}  // namespace unravel
