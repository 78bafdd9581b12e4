#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "unravel/core.hpp"
#include "unravel/diffusion.hpp"
#include "unravel/jump.hpp"
#include "unravel/oracle.hpp"
#include "unravel/rng.hpp"

namespace unravel {

struct Trajectory {
  std::string scheme_id;
  RngStream stream;
  TimeGrid grid;
  std::vector<StateVector> states;  // one per grid point
  int jumps = 0;                    // jump schemes only
};

// one Euler-Maruyama step; noise holds scheme.noise_count standard normals,
// scaled by sqrt(dt) internally; norm-preserving schemes are renormalized,
// LQSD is left as is
void em_step(const DiffusionScheme& scheme, const StateVector& psi, double dt,
             const double* noise, DiffusionEval& ws, StateVector& out);
StateVector em_step(const DiffusionScheme& scheme, const StateVector& psi,
                    double dt, const std::vector<double>& noise);

// one Bernoulli PDMP step driven by a single uniform split into stacked
// subintervals: channel k fires when acc < u <= acc + lambda_k dt; the state
// is renormalized either way. jumped, when given, receives the fired channel
// index or -1. Total jump probability above 0.5 is a hard error, above 0.1
// a one-time warning.
void jump_step(const JumpScheme& scheme, const StateVector& psi, double dt,
               double uniform, JumpEval& ws, StateVector& out,
               int* jumped = nullptr);
StateVector jump_step(const JumpScheme& scheme, const StateVector& psi,
                      double dt, double uniform);

Trajectory run_trajectory(const DiffusionScheme& scheme, const StateVector& psi0,
                          const TimeGrid& grid, const RngStream& stream);
Trajectory run_trajectory(const JumpScheme& scheme, const StateVector& psi0,
                          const TimeGrid& grid, const RngStream& stream);

// trajectory j draws from RngStream{seed, stream_offset + j}
std::vector<Trajectory> run_ensemble(const DiffusionScheme& scheme,
                                     const StateVector& psi0, const TimeGrid& grid,
                                     int n_samples, uint64_t seed,
                                     uint64_t stream_offset = 0);
std::vector<Trajectory> run_ensemble(const JumpScheme& scheme,
                                     const StateVector& psi0, const TimeGrid& grid,
                                     int n_samples, uint64_t seed,
                                     uint64_t stream_offset = 0);

struct Observable {
  std::string label;
  CMatrix mat;
};

// validates Hermiticity and a nonempty label
Observable make_observable(std::string label, CMatrix mat);

struct MomentCell {
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the running mean
};

// streaming per-(observable, grid point) moments of the per-trajectory
// observable value <psi|O|psi>
struct EnsembleMoments {
  TimeGrid grid;
  uint64_t n_samples = 0;
  std::vector<std::string> labels;
  std::vector<std::vector<MomentCell>> cells;  // [observable][grid point]
  double mean_jumps = 0.0;                     // per trajectory, jump schemes

  double mean(int obs, int point) const;
  double second_moment(int obs, int point) const;
  double population_variance(int obs, int point) const;  // m2 / n
  double sample_variance(int obs, int point) const;      // m2 / (n - 1)
};

// OpenMP ensemble accumulation. Trajectories are grouped into fixed blocks of
// 64; per-block Welford sums are merged in block order, so the result is
// bitwise identical for any thread count.
EnsembleMoments accumulate_ensemble(const DiffusionScheme& scheme,
                                    const StateVector& psi0, const TimeGrid& grid,
                                    const std::vector<Observable>& observables,
                                    int n_samples, uint64_t seed,
                                    uint64_t stream_offset = 0);
EnsembleMoments accumulate_ensemble(const JumpScheme& scheme,
                                    const StateVector& psi0, const TimeGrid& grid,
                                    const std::vector<Observable>& observables,
                                    int n_samples, uint64_t seed,
                                    uint64_t stream_offset = 0);

// single-threaded reference: one running Welford pass over all trajectories
EnsembleMoments accumulate_ensemble_serial(const DiffusionScheme& scheme,
                                           const StateVector& psi0,
                                           const TimeGrid& grid,
                                           const std::vector<Observable>& observables,
                                           int n_samples, uint64_t seed,
                                           uint64_t stream_offset = 0);
EnsembleMoments accumulate_ensemble_serial(const JumpScheme& scheme,
                                           const StateVector& psi0,
                                           const TimeGrid& grid,
                                           const std::vector<Observable>& observables,
                                           int n_samples, uint64_t seed,
                                           uint64_t stream_offset = 0);

}  // namespace unravel
