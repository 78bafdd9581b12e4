#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unravel/core.hpp"
#include "unravel/oracle.hpp"
#include "unravel/sim.hpp"

namespace unravel {

// Monte Carlo estimate of one observable along the grid. variance is the
// population variance of the per-trajectory values; the estimator variance
// (divided by n_samples) appears only in metrics.
struct EstimateSeries {
  TimeGrid grid;
  uint64_t n_samples = 0;
  std::vector<double> mean;
  std::vector<double> second_moment;
  std::vector<double> variance;
  std::vector<double> exact;  // tr(O rho(t_i)); may be empty
};

EstimateSeries estimate_series(const EnsembleMoments& moments, int obs_index,
                               std::vector<double> exact = {});
EstimateSeries estimate_series(const std::vector<Trajectory>& trajectories,
                               const Observable& obs,
                               std::vector<double> exact = {});

struct Metrics {
  double trajectory_error = 0.0;  // mean_i |X_i - tr(O rho(t_i))|
  double averaged_var = 0.0;      // mean_i s_i^2 / n_samples
};

Metrics metrics(const EstimateSeries& series);

struct DvEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// one-step Monte Carlo estimate of d/dt E<O>^2 at psi0:
// (E<O>(h)^2 - <O>(0)^2)/h over n_samples single steps of length h
DvEstimate empirical_dv(const DiffusionScheme& scheme, const CMatrix& obs,
                        const StateVector& psi0, double horizon, int n_samples,
                        uint64_t seed);
DvEstimate empirical_dv(const JumpScheme& scheme, const CMatrix& obs,
                        const StateVector& psi0, double horizon, int n_samples,
                        uint64_t seed);

// linear-interpolation (type-7) quartiles
struct BoxplotSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

BoxplotSummary boxplot_summary(std::vector<double> values);

// repeated-run record for one (scheme, observable) pair
struct RunSummary {
  std::string scheme_id;
  std::string observable;
  std::vector<double> errors;
  std::vector<double> variances;
  BoxplotSummary error_box;
  BoxplotSummary variance_box;
  double median_error = 0.0;
  double median_variance = 0.0;
};

RunSummary summarize_runs(std::string scheme_id, std::string observable,
                          std::vector<double> errors,
                          std::vector<double> variances);

}  // namespace unravel
