#include "unravel/stats.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace unravel {

namespace {

double obs_value(const CMatrix& obs, const StateVector& psi, StateVector& scratch) {
  matvec(obs, psi, scratch);
  return vdot(psi, scratch).real();
}

void check_exact(const TimeGrid& grid, const std::vector<double>& exact) {
  if (!exact.empty() && exact.size() != static_cast<size_t>(grid.points())) {
    throw ConfigError("estimate_series: exact series length " +
                      std::to_string(exact.size()) + " does not match grid (" +
                      std::to_string(grid.points()) + " points)");
  }
}

}  // namespace

EstimateSeries estimate_series(const EnsembleMoments& moments, int obs_index,
                               std::vector<double> exact) {
  if (obs_index < 0 || obs_index >= static_cast<int>(moments.cells.size())) {
    throw ConfigError("estimate_series: observable index out of range");
  }
  if (moments.n_samples == 0) {
    throw ConfigError("estimate_series: empty ensemble");
  }
  check_exact(moments.grid, exact);
  const int points = moments.grid.points();
  EstimateSeries s;
  s.grid = moments.grid;
  s.n_samples = moments.n_samples;
  s.mean.resize(points);
  s.second_moment.resize(points);
  s.variance.resize(points);
  for (int i = 0; i < points; ++i) {
    s.mean[i] = moments.mean(obs_index, i);
    s.second_moment[i] = moments.second_moment(obs_index, i);
    s.variance[i] = moments.population_variance(obs_index, i);
  }
  s.exact = std::move(exact);
  return s;
}

EstimateSeries estimate_series(const std::vector<Trajectory>& trajectories,
                               const Observable& obs, std::vector<double> exact) {
  if (trajectories.empty()) {
    throw ConfigError("estimate_series: empty ensemble");
  }
  const TimeGrid grid = trajectories.front().grid;
  const int points = grid.points();
  check_exact(grid, exact);
  EstimateSeries s;
  s.grid = grid;
  s.n_samples = trajectories.size();
  s.mean.assign(points, 0.0);
  s.second_moment.assign(points, 0.0);
  s.variance.assign(points, 0.0);
  StateVector scratch;
  std::vector<double> m2(points, 0.0);
  uint64_t count = 0;
  for (const auto& tr : trajectories) {
    if (tr.states.size() != static_cast<size_t>(points)) {
      throw ConfigError("estimate_series: trajectory grid mismatch");
    }
    ++count;
    for (int i = 0; i < points; ++i) {
      scratch.resize(tr.states[i].size());
      const double x = obs_value(obs.mat, tr.states[i], scratch);
      const double delta = x - s.mean[i];
      s.mean[i] += delta / static_cast<double>(count);
      m2[i] += delta * (x - s.mean[i]);
    }
  }
  for (int i = 0; i < points; ++i) {
    s.variance[i] = m2[i] / static_cast<double>(count);
    s.second_moment[i] = s.variance[i] + s.mean[i] * s.mean[i];
  }
  s.exact = std::move(exact);
  return s;
}

Metrics metrics(const EstimateSeries& series) {
  const size_t points = series.mean.size();
  if (points == 0) {
    throw ConfigError("metrics: empty series");
  }
  if (series.exact.size() != points) {
    throw ConfigError("metrics: exact series missing or length mismatch");
  }
  if (series.n_samples < 2) {
    throw ConfigError("metrics: need at least 2 samples for the variance");
  }
  const double n = static_cast<double>(series.n_samples);
  Metrics m;
  for (size_t i = 0; i < points; ++i) {
    m.trajectory_error += std::abs(series.mean[i] - series.exact[i]);
    // unbiased sample variance of per-trajectory values, then / n_samples
    m.averaged_var += series.variance[i] / (n - 1.0);
  }
  m.trajectory_error /= static_cast<double>(points);
  m.averaged_var /= static_cast<double>(points);
  return m;
}

namespace {

template <typename StepFn>
DvEstimate dv_loop(const CMatrix& obs, const StateVector& psi0, double horizon,
                   int n_samples, uint64_t seed, StepFn&& one_step) {
  require_hermitian(obs, 1e-12, "empirical_dv: observable");
  if (obs.rows != static_cast<int>(psi0.size())) {
    throw ConfigError("empirical_dv: observable dimension mismatch");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("empirical_dv: horizon must be positive and finite");
  }
  if (n_samples < 2) {
    throw ConfigError("empirical_dv: n_samples must be at least 2");
  }
  StateVector next, scratch(psi0.size());
  const double x0 = obs_value(obs, psi0, scratch);
  const double y0 = x0 * x0;
  double mean = 0.0;
  double m2 = 0.0;
  for (int j = 0; j < n_samples; ++j) {
    one_step(RngStream{seed, static_cast<uint64_t>(j)}, next);
    const double x = obs_value(obs, next, scratch);
    const double y = x * x;
    const double delta = y - mean;
    mean += delta / static_cast<double>(j + 1);
    m2 += delta * (y - mean);
  }
  const double s2 = m2 / static_cast<double>(n_samples - 1);
  DvEstimate est;
  est.value = (mean - y0) / horizon;
  est.std_error = std::sqrt(s2 / static_cast<double>(n_samples)) / horizon;
  return est;
}

}  // namespace

DvEstimate empirical_dv(const DiffusionScheme& scheme, const CMatrix& obs,
                        const StateVector& psi0, double horizon, int n_samples,
                        uint64_t seed) {
  if (scheme.dim != static_cast<int>(psi0.size())) {
    throw ConfigError("empirical_dv: state dimension mismatch");
  }
  DiffusionEval ws;
  std::vector<double> noise(static_cast<size_t>(scheme.noise_count));
  return dv_loop(obs, psi0, horizon, n_samples, seed,
                 [&](const RngStream& stream, StateVector& next) {
                   for (int j = 0; j < scheme.noise_count; ++j) {
                     noise[j] = stream.gaussian(0, static_cast<uint32_t>(j));
                   }
                   em_step(scheme, psi0, horizon, noise.data(), ws, next);
                 });
}

DvEstimate empirical_dv(const JumpScheme& scheme, const CMatrix& obs,
                        const StateVector& psi0, double horizon, int n_samples,
                        uint64_t seed) {
  if (scheme.dim != static_cast<int>(psi0.size())) {
    throw ConfigError("empirical_dv: state dimension mismatch");
  }
  JumpEval ws;
  return dv_loop(obs, psi0, horizon, n_samples, seed,
                 [&](const RngStream& stream, StateVector& next) {
                   jump_step(scheme, psi0, horizon, stream.uniform(0, 0), ws, next);
                 });
}

namespace {

double quantile_sorted(const std::vector<double>& x, double p) {
  const size_t n = x.size();
  if (n == 1) return x[0];
  const double pos = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

}  // namespace

BoxplotSummary boxplot_summary(std::vector<double> values) {
  if (values.empty()) {
    throw ConfigError("boxplot_summary: empty input");
  }
  std::sort(values.begin(), values.end());
  BoxplotSummary b;
  b.min = values.front();
  b.q1 = quantile_sorted(values, 0.25);
  b.median = quantile_sorted(values, 0.5);
  b.q3 = quantile_sorted(values, 0.75);
  b.max = values.back();
  return b;
}

RunSummary summarize_runs(std::string scheme_id, std::string observable,
                          std::vector<double> errors,
                          std::vector<double> variances) {
  if (errors.empty() || errors.size() != variances.size()) {
    throw ConfigError("summarize_runs: need equally many errors and variances");
  }
  RunSummary r;
  r.scheme_id = std::move(scheme_id);
  r.observable = std::move(observable);
  r.error_box = boxplot_summary(errors);
  r.variance_box = boxplot_summary(variances);
  r.median_error = r.error_box.median;
  r.median_variance = r.variance_box.median;
  r.errors = std::move(errors);
  r.variances = std::move(variances);
  return r;
}

}  // namespace unravel
