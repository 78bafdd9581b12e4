#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "unravel/core.hpp"
#include "unravel/models.hpp"

namespace unravel {
namespace tst {

// decay model restricted to the damping channel; the single-channel benchmark
inline LindbladModel decay_k1() {
  LindbladModel full = decay_model(DecayParams{});
  return make_model(full.hamiltonian, {full.lindblad_ops[0]});
}

inline StateVector excited() { return basis_state(2, 0); }
inline StateVector ground() { return basis_state(2, 1); }

inline double mat_max_abs_diff(const CMatrix& x, const CMatrix& y) {
  double worst = 0.0;
  for (int r = 0; r < x.rows; ++r) {
    for (int c = 0; c < x.cols; ++c) {
      worst = std::max(worst, std::abs(x(r, c) - y(r, c)));
    }
  }
  return worst;
}

inline double max_abs_diff(const StateVector& x, const StateVector& y) {
  double m = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(x[i] - y[i]);
    if (d > m) m = d;
  }
  return m;
}

// scheme-independent part of the dv integrand, the exact growth rate of
// E<O>^2 once the loss term has been driven to zero
inline double dv_floor(const LindbladModel& m, const CMatrix& obs,
                       const StateVector& psi) {
  const CMatrix lind = apply_generator(m, outer(psi, psi));
  const StateVector opsi = matvec(obs, psi);
  const double o_mean = vdot(psi, opsi).real();
  double total = 2.0 * vdot(opsi, matvec(lind, opsi)).real();
  for (const auto& op : m.lindblad_ops) {
    const StateVector lpsi = matvec(op, psi);
    total += 2.0 * vdot(lpsi, matvec(obs, lpsi)).real() * o_mean;
    total -= 2.0 * std::norm(vdot(opsi, lpsi));
  }
  return total;
}

}  // namespace tst
}  // namespace unravel
