#pragma once

#include <vector>

#include "unravel/core.hpp"

namespace unravel {

struct TimeGrid {
  double t0 = 0.0;
  double dt = 0.0;
  int n_steps = 0;

  int points() const { return n_steps + 1; }
  double time(int i) const { return t0 + dt * i; }
};

TimeGrid make_grid(double t0, double dt, int n_steps);

// column-stacking convention: vec(A X B) = (B^T (x) A) vec(X)
StateVector vec_density(const DensityMatrix& rho);
DensityMatrix unvec_density(const StateVector& v, int dim);

// matrix of the generator acting on vec(rho)
CMatrix liouvillian_matrix(const LindbladModel& model);

// dense reference solution: RK4 on vec(rho) with internal step chosen so
// |L|_1 * h <= 0.1, then refined until step-halving agrees to 1e-8 in max
// norm over all grid outputs; outputs are re-Hermitized
std::vector<DensityMatrix> propagate_exact(const LindbladModel& model,
                                           const DensityMatrix& rho0,
                                           const TimeGrid& grid);

// tr(O rho(t_i)) for each grid point
std::vector<double> trace_series(const std::vector<DensityMatrix>& states,
                                 const CMatrix& obs);

}  // namespace unravel
