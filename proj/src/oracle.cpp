#include "unravel/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace unravel {

TimeGrid make_grid(double t0, double dt, int n_steps) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("time grid: dt must be positive and finite");
  }
  if (n_steps < 1) {
    throw ConfigError("time grid: n_steps must be >= 1");
  }
  return TimeGrid{t0, dt, n_steps};
}

StateVector vec_density(const DensityMatrix& rho) {
  const int n = rho.rows;
  StateVector v(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(j) * n + i] = rho(i, j);
  return v;
}

DensityMatrix unvec_density(const StateVector& v, int dim) {
  if (v.size() != static_cast<size_t>(dim) * dim) {
    throw ConfigError("unvec_density: size mismatch");
  }
  DensityMatrix rho(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) rho(i, j) = v[static_cast<size_t>(j) * dim + i];
  return rho;
}

CMatrix liouvillian_matrix(const LindbladModel& model) {
  const int n = model.dim;
  const CMatrix eye = CMatrix::identity(n);
  const cplx mi(0.0, -1.0);
  // vec(H rho) = (I (x) H) vec, vec(rho H) = (H^T (x) I) vec
  CMatrix liou = mi * (kron(eye, model.hamiltonian) -
                       kron(transpose(model.hamiltonian), eye));
  for (const auto& op : model.lindblad_ops) {
    const CMatrix q = adjoint(op) * op;
    liou = liou + kron(conjugate(op), op) -
           cplx(0.5) * (kron(eye, q) + kron(transpose(q), eye));
  }
  return liou;
}

namespace {

// one RK4 step of v' = L v
void rk4_step(const CMatrix& liou, StateVector& v, double h, StateVector& k1,
              StateVector& k2, StateVector& k3, StateVector& k4,
              StateVector& tmp) {
  matvec(liou, v, k1);
  tmp = v;
  axpy(0.5 * h, k1, tmp);
  matvec(liou, tmp, k2);
  tmp = v;
  axpy(0.5 * h, k2, tmp);
  matvec(liou, tmp, k3);
  tmp = v;
  axpy(h, k3, tmp);
  matvec(liou, tmp, k4);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
}

// integrate over the grid with m internal RK4 steps per grid step
std::vector<StateVector> solve_on_grid(const CMatrix& liou, const StateVector& v0,
                                       const TimeGrid& grid, long m) {
  const double h = grid.dt / static_cast<double>(m);
  std::vector<StateVector> out;
  out.reserve(grid.points());
  StateVector v = v0, k1, k2, k3, k4, tmp;
  out.push_back(v);
  for (int i = 0; i < grid.n_steps; ++i) {
    for (long s = 0; s < m; ++s) rk4_step(liou, v, h, k1, k2, k3, k4, tmp);
    for (const auto& c : v) {
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
        throw NumericError("propagate_exact: solution diverged at t=" +
                           std::to_string(grid.time(i + 1)));
      }
    }
    out.push_back(v);
  }
  return out;
}

double max_difference(const std::vector<StateVector>& x,
                      const std::vector<StateVector>& y) {
  double d = 0.0;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = 0; j < x[i].size(); ++j)
      d = std::max(d, std::abs(x[i][j] - y[i][j]));
  return d;
}

}  // namespace

std::vector<DensityMatrix> propagate_exact(const LindbladModel& model,
                                           const DensityMatrix& rho0,
                                           const TimeGrid& grid) {
  validate_density(rho0);
  if (rho0.rows != model.dim) {
    throw ConfigError("propagate_exact: state dimension does not match model");
  }
  const CMatrix liou = liouvillian_matrix(model);
  const StateVector v0 = vec_density(rho0);

  const double norm1 = one_norm(liou);
  long m = 1;
  if (norm1 > 0.0) {
    m = std::max<long>(1, static_cast<long>(std::ceil(grid.dt * norm1 / 0.1)));
  }

  auto coarse = solve_on_grid(liou, v0, grid, m);
  std::vector<StateVector> fine;
  bool converged = false;
  for (int iter = 0; iter < 24; ++iter) {
    fine = solve_on_grid(liou, v0, grid, 2 * m);
    if (max_difference(coarse, fine) <= 1e-8) {
      converged = true;
      break;
    }
    m *= 2;
    coarse = std::move(fine);
  }
  if (!converged) {
    throw NumericError("propagate_exact: step refinement did not converge");
  }

  std::vector<DensityMatrix> out;
  out.reserve(fine.size());
  for (const auto& v : fine) {
    DensityMatrix rho = unvec_density(v, model.dim);
    DensityMatrix sym = cplx(0.5) * (rho + adjoint(rho));
    const double tr_err = std::abs(trace(sym) - 1.0);
    if (tr_err > 1e-8) {
      throw NumericError("propagate_exact: trace drifted by " +
                         std::to_string(tr_err));
    }
    out.push_back(std::move(sym));
  }
  return out;
}

std::vector<double> trace_series(const std::vector<DensityMatrix>& states,
                                 const CMatrix& obs) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& rho : states) {
    const cplx v = trace(obs * rho);
    out.push_back(v.real());
  }
  return out;
}

}  // namespace unravel
