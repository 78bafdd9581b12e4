#include "unravel/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <utility>

namespace unravel {

namespace {

bool all_finite(const StateVector& v) {
  for (const auto& x : v) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  }
  return true;
}

void require_unit(const StateVector& psi, const char* what) {
  if (std::abs(vnorm(psi) - 1.0) > 1e-8) {
    throw ConfigError(std::string(what) + ": initial state is not unit norm");
  }
}

double obs_value(const CMatrix& obs, const StateVector& psi, StateVector& scratch) {
  matvec(obs, psi, scratch);
  return vdot(psi, scratch).real();
}

}  // namespace

void em_step(const DiffusionScheme& scheme, const StateVector& psi, double dt,
             const double* noise, DiffusionEval& ws, StateVector& out) {
  scheme.eval(psi, ws);
  const double root_dt = std::sqrt(dt);
  const int n = scheme.dim;
  out.resize(n);
  for (int i = 0; i < n; ++i) out[i] = psi[i] + ws.drift[i] * dt;
  for (int j = 0; j < scheme.noise_count; ++j) {
    axpy(cplx(noise[j] * root_dt), ws.noise[j], out);
  }
  if (!all_finite(out)) {
    throw NumericError("em_step: non-finite state");
  }
  if (scheme.norm_preserving) normalize(out);
}

StateVector em_step(const DiffusionScheme& scheme, const StateVector& psi,
                    double dt, const std::vector<double>& noise) {
  if (static_cast<int>(noise.size()) != scheme.noise_count) {
    throw ConfigError("em_step: expected " + std::to_string(scheme.noise_count) +
                      " Gaussian increments, got " + std::to_string(noise.size()));
  }
  DiffusionEval ws;
  StateVector out;
  em_step(scheme, psi, dt, noise.data(), ws, out);
  return out;
}

void jump_step(const JumpScheme& scheme, const StateVector& psi, double dt,
               double uniform, JumpEval& ws, StateVector& out, int* jumped) {
  scheme.eval_drift_rates(psi, ws);
  double total = 0.0;
  double largest = 0.0;
  for (int k = 0; k < scheme.channel_count; ++k) {
    total += ws.rates[k] * dt;
    if (ws.rates[k] > largest) largest = ws.rates[k];
  }
  if (total > 0.5) {
    throw NumericError("jump_step: total jump probability " + std::to_string(total) +
                       " per step exceeds 0.5 (largest channel rate " +
                       std::to_string(largest) + ", dt " + std::to_string(dt) +
                       "); reduce dt or the rate cap");
  }
  static std::atomic<bool> warned{false};
  if (total > 0.1 && !warned.exchange(true)) {
    std::fprintf(stderr,
                 "warning: jump probability %.3g per step exceeds 0.1; the "
                 "Bernoulli discretization may be biased\n",
                 total);
  }
  const int n = scheme.dim;
  int fired = -1;
  double acc = 0.0;
  for (int k = 0; k < scheme.channel_count && fired < 0; ++k) {
    const double p = ws.rates[k] * dt;
    if (acc < uniform && uniform <= acc + p) fired = k;
    acc += p;
  }
  if (fired >= 0) {
    scheme.eval_jump(psi, fired, ws);
    out.resize(n);
    for (int i = 0; i < n; ++i) out[i] = psi[i] + ws.jump[i];
  } else {
    out.resize(n);
    for (int i = 0; i < n; ++i) out[i] = psi[i] + ws.drift[i] * dt;
  }
  if (!all_finite(out)) {
    throw NumericError("jump_step: non-finite state");
  }
  normalize(out);
  if (jumped) *jumped = fired;
}

StateVector jump_step(const JumpScheme& scheme, const StateVector& psi,
                      double dt, double uniform) {
  JumpEval ws;
  StateVector out;
  jump_step(scheme, psi, dt, uniform, ws, out);
  return out;
}

namespace {

// shared stepping shims so trajectory and ensemble drivers can be written
// once for both scheme families

struct DiffusionStepper {
  const DiffusionScheme& scheme;
  DiffusionEval ws;
  std::vector<double> noise;
  int jumps = 0;

  explicit DiffusionStepper(const DiffusionScheme& s)
      : scheme(s), noise(static_cast<size_t>(s.noise_count)) {}

  void step(const StateVector& psi, double dt, const RngStream& stream,
            uint64_t s, StateVector& out) {
    for (int j = 0; j < scheme.noise_count; ++j) {
      noise[j] = stream.gaussian(s, static_cast<uint32_t>(j));
    }
    em_step(scheme, psi, dt, noise.data(), ws, out);
  }
};

struct JumpStepper {
  const JumpScheme& scheme;
  JumpEval ws;
  int jumps = 0;

  explicit JumpStepper(const JumpScheme& s) : scheme(s) {}

  void step(const StateVector& psi, double dt, const RngStream& stream,
            uint64_t s, StateVector& out) {
    int fired = -1;
    jump_step(scheme, psi, dt, stream.uniform(s, 0), ws, out, &fired);
    if (fired >= 0) ++jumps;
  }
};

template <typename Scheme, typename Stepper>
Trajectory run_trajectory_impl(const Scheme& scheme, const StateVector& psi0,
                               const TimeGrid& grid, const RngStream& stream) {
  require_unit(psi0, "run_trajectory");
  if (psi0.size() != static_cast<size_t>(scheme.dim)) {
    throw ConfigError("run_trajectory: state dimension mismatch");
  }
  Trajectory tr;
  tr.scheme_id = scheme.id;
  tr.stream = stream;
  tr.grid = grid;
  tr.states.reserve(grid.points());
  tr.states.push_back(psi0);
  Stepper stepper(scheme);
  StateVector next;
  for (int s = 0; s < grid.n_steps; ++s) {
    try {
      stepper.step(tr.states.back(), grid.dt, stream, static_cast<uint64_t>(s),
                   next);
    } catch (const NumericError& e) {
      throw NumericError("scheme '" + scheme.id + "' trajectory " +
                         std::to_string(stream.stream) + " step " +
                         std::to_string(s) + ": " + e.what());
    }
    tr.states.push_back(next);
  }
  tr.jumps = stepper.jumps;
  return tr;
}

template <typename Scheme>
std::vector<Trajectory> run_ensemble_impl(const Scheme& scheme,
                                          const StateVector& psi0,
                                          const TimeGrid& grid, int n_samples,
                                          uint64_t seed, uint64_t stream_offset) {
  if (n_samples < 1) {
    throw ConfigError("run_ensemble: n_samples must be at least 1");
  }
  std::vector<Trajectory> out;
  out.reserve(static_cast<size_t>(n_samples));
  for (int j = 0; j < n_samples; ++j) {
    out.push_back(run_trajectory(
        scheme, psi0, grid, RngStream{seed, stream_offset + static_cast<uint64_t>(j)}));
  }
  return out;
}

constexpr int kBlock = 64;

struct BlockAcc {
  uint64_t count = 0;
  std::vector<MomentCell> cells;  // flattened [observable * points]
  double jump_sum = 0.0;
};

void welford_update(MomentCell& c, uint64_t count, double x) {
  const double delta = x - c.mean;
  c.mean += delta / static_cast<double>(count);
  c.m2 += delta * (x - c.mean);
}

void merge_acc(BlockAcc& a, const BlockAcc& b) {
  if (b.count == 0) return;
  if (a.count == 0) {
    a = b;
    return;
  }
  const double na = static_cast<double>(a.count);
  const double nb = static_cast<double>(b.count);
  const double n = na + nb;
  for (size_t i = 0; i < a.cells.size(); ++i) {
    const double delta = b.cells[i].mean - a.cells[i].mean;
    a.cells[i].mean += delta * (nb / n);
    a.cells[i].m2 += b.cells[i].m2 + delta * delta * (na * nb / n);
  }
  a.count += b.count;
  a.jump_sum += b.jump_sum;
}

// runs one trajectory streaming its observable values into acc
template <typename Scheme, typename Stepper>
void stream_trajectory(const Scheme& scheme, const StateVector& psi0,
                       const TimeGrid& grid,
                       const std::vector<Observable>& observables,
                       const RngStream& stream, Stepper& stepper, BlockAcc& acc,
                       StateVector& psi, StateVector& next, StateVector& scratch) {
  const int nobs = static_cast<int>(observables.size());
  const int points = grid.points();
  acc.count += 1;
  stepper.jumps = 0;
  psi = psi0;
  for (int i = 0; i < nobs; ++i) {
    welford_update(acc.cells[static_cast<size_t>(i) * points], acc.count,
                   obs_value(observables[i].mat, psi, scratch));
  }
  for (int s = 0; s < grid.n_steps; ++s) {
    try {
      stepper.step(psi, grid.dt, stream, static_cast<uint64_t>(s), next);
    } catch (const NumericError& e) {
      throw NumericError("scheme '" + scheme.id + "' trajectory " +
                         std::to_string(stream.stream) + " step " +
                         std::to_string(s) + ": " + e.what());
    }
    psi.swap(next);
    for (int i = 0; i < nobs; ++i) {
      welford_update(acc.cells[static_cast<size_t>(i) * points + s + 1],
                     acc.count, obs_value(observables[i].mat, psi, scratch));
    }
  }
  acc.jump_sum += stepper.jumps;
}

template <typename Scheme>
void check_ensemble_args(const Scheme& scheme, const StateVector& psi0,
                         const std::vector<Observable>& observables,
                         int n_samples) {
  require_unit(psi0, "accumulate_ensemble");
  if (psi0.size() != static_cast<size_t>(scheme.dim)) {
    throw ConfigError("accumulate_ensemble: state dimension mismatch");
  }
  if (observables.empty()) {
    throw ConfigError("accumulate_ensemble: no observables given");
  }
  for (const auto& o : observables) {
    if (o.mat.rows != scheme.dim) {
      throw ConfigError("accumulate_ensemble: observable '" + o.label +
                        "' dimension mismatch");
    }
  }
  if (n_samples < 1) {
    throw ConfigError("accumulate_ensemble: n_samples must be at least 1");
  }
}

EnsembleMoments finish_moments(const TimeGrid& grid,
                               const std::vector<Observable>& observables,
                               const BlockAcc& total) {
  EnsembleMoments m;
  m.grid = grid;
  m.n_samples = total.count;
  const int points = grid.points();
  m.labels.reserve(observables.size());
  for (const auto& o : observables) m.labels.push_back(o.label);
  m.cells.resize(observables.size());
  for (size_t i = 0; i < observables.size(); ++i) {
    m.cells[i].assign(total.cells.begin() + static_cast<long>(i) * points,
                      total.cells.begin() + static_cast<long>(i + 1) * points);
  }
  m.mean_jumps = total.count ? total.jump_sum / static_cast<double>(total.count) : 0.0;
  return m;
}

template <typename Scheme, typename Stepper>
EnsembleMoments accumulate_impl(const Scheme& scheme, const StateVector& psi0,
                                const TimeGrid& grid,
                                const std::vector<Observable>& observables,
                                int n_samples, uint64_t seed,
                                uint64_t stream_offset) {
  check_ensemble_args(scheme, psi0, observables, n_samples);
  const int points = grid.points();
  const size_t n_cells = observables.size() * static_cast<size_t>(points);
  const int n_blocks = (n_samples + kBlock - 1) / kBlock;
  std::vector<BlockAcc> blocks(static_cast<size_t>(n_blocks));
  std::atomic<bool> failed{false};
  std::exception_ptr err;
#pragma omp parallel
  {
    Stepper stepper(scheme);
    StateVector psi, next, scratch(static_cast<size_t>(scheme.dim));
#pragma omp for schedule(dynamic)
    for (int b = 0; b < n_blocks; ++b) {
      if (failed.load(std::memory_order_relaxed)) continue;
      BlockAcc& acc = blocks[static_cast<size_t>(b)];
      acc.cells.assign(n_cells, MomentCell{});
      const int j_end = std::min(n_samples, (b + 1) * kBlock);
      try {
        for (int j = b * kBlock; j < j_end; ++j) {
          stream_trajectory(scheme, psi0, grid, observables,
                            RngStream{seed, stream_offset + static_cast<uint64_t>(j)},
                            stepper, acc, psi, next, scratch);
        }
      } catch (...) {
#pragma omp critical(unravel_ensemble_err)
        {
          if (!err) err = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    }
  }
  if (err) std::rethrow_exception(err);
  BlockAcc total;
  total.cells.assign(n_cells, MomentCell{});
  for (const auto& b : blocks) merge_acc(total, b);
  return finish_moments(grid, observables, total);
}

template <typename Scheme, typename Stepper>
EnsembleMoments accumulate_serial_impl(const Scheme& scheme,
                                       const StateVector& psi0,
                                       const TimeGrid& grid,
                                       const std::vector<Observable>& observables,
                                       int n_samples, uint64_t seed,
                                       uint64_t stream_offset) {
  check_ensemble_args(scheme, psi0, observables, n_samples);
  const int points = grid.points();
  BlockAcc total;
  total.cells.assign(observables.size() * static_cast<size_t>(points), MomentCell{});
  Stepper stepper(scheme);
  StateVector psi, next, scratch(static_cast<size_t>(scheme.dim));
  for (int j = 0; j < n_samples; ++j) {
    stream_trajectory(scheme, psi0, grid, observables,
                      RngStream{seed, stream_offset + static_cast<uint64_t>(j)},
                      stepper, total, psi, next, scratch);
  }
  return finish_moments(grid, observables, total);
}

}  // namespace

Trajectory run_trajectory(const DiffusionScheme& scheme, const StateVector& psi0,
                          const TimeGrid& grid, const RngStream& stream) {
  return run_trajectory_impl<DiffusionScheme, DiffusionStepper>(scheme, psi0,
                                                                grid, stream);
}

Trajectory run_trajectory(const JumpScheme& scheme, const StateVector& psi0,
                          const TimeGrid& grid, const RngStream& stream) {
  return run_trajectory_impl<JumpScheme, JumpStepper>(scheme, psi0, grid, stream);
}

std::vector<Trajectory> run_ensemble(const DiffusionScheme& scheme,
                                     const StateVector& psi0, const TimeGrid& grid,
                                     int n_samples, uint64_t seed,
                                     uint64_t stream_offset) {
  return run_ensemble_impl(scheme, psi0, grid, n_samples, seed, stream_offset);
}

std::vector<Trajectory> run_ensemble(const JumpScheme& scheme,
                                     const StateVector& psi0, const TimeGrid& grid,
                                     int n_samples, uint64_t seed,
                                     uint64_t stream_offset) {
  return run_ensemble_impl(scheme, psi0, grid, n_samples, seed, stream_offset);
}

Observable make_observable(std::string label, CMatrix mat) {
  if (label.empty()) {
    throw ConfigError("make_observable: empty label");
  }
  require_hermitian(mat, 1e-12, "observable '" + label + "'");
  return Observable{std::move(label), std::move(mat)};
}

double EnsembleMoments::mean(int obs, int point) const {
  return cells[static_cast<size_t>(obs)][static_cast<size_t>(point)].mean;
}

double EnsembleMoments::second_moment(int obs, int point) const {
  const auto& c = cells[static_cast<size_t>(obs)][static_cast<size_t>(point)];
  return c.m2 / static_cast<double>(n_samples) + c.mean * c.mean;
}

double EnsembleMoments::population_variance(int obs, int point) const {
  const auto& c = cells[static_cast<size_t>(obs)][static_cast<size_t>(point)];
  return c.m2 / static_cast<double>(n_samples);
}

double EnsembleMoments::sample_variance(int obs, int point) const {
  if (n_samples < 2) {
    throw NumericError("sample_variance: need at least 2 samples");
  }
  const auto& c = cells[static_cast<size_t>(obs)][static_cast<size_t>(point)];
  return c.m2 / static_cast<double>(n_samples - 1);
}

EnsembleMoments accumulate_ensemble(const DiffusionScheme& scheme,
                                    const StateVector& psi0, const TimeGrid& grid,
                                    const std::vector<Observable>& observables,
                                    int n_samples, uint64_t seed,
                                    uint64_t stream_offset) {
  return accumulate_impl<DiffusionScheme, DiffusionStepper>(
      scheme, psi0, grid, observables, n_samples, seed, stream_offset);
}

EnsembleMoments accumulate_ensemble(const JumpScheme& scheme,
                                    const StateVector& psi0, const TimeGrid& grid,
                                    const std::vector<Observable>& observables,
                                    int n_samples, uint64_t seed,
                                    uint64_t stream_offset) {
  return accumulate_impl<JumpScheme, JumpStepper>(scheme, psi0, grid, observables,
                                                  n_samples, seed, stream_offset);
}

EnsembleMoments accumulate_ensemble_serial(const DiffusionScheme& scheme,
                                           const StateVector& psi0,
                                           const TimeGrid& grid,
                                           const std::vector<Observable>& observables,
                                           int n_samples, uint64_t seed,
                                           uint64_t stream_offset) {
  return accumulate_serial_impl<DiffusionScheme, DiffusionStepper>(
      scheme, psi0, grid, observables, n_samples, seed, stream_offset);
}

EnsembleMoments accumulate_ensemble_serial(const JumpScheme& scheme,
                                           const StateVector& psi0,
                                           const TimeGrid& grid,
                                           const std::vector<Observable>& observables,
                                           int n_samples, uint64_t seed,
                                           uint64_t stream_offset) {
  return accumulate_serial_impl<JumpScheme, JumpStepper>(
      scheme, psi0, grid, observables, n_samples, seed, stream_offset);
}

}  // namespace unravel
