#include "unravel/models.hpp"

#include <cmath>

namespace unravel {

LindbladModel decay_model(const DecayParams& p) {
  if (!(p.lambda0 > 0.0)) {
    throw ConfigError("decay_model: lambda0 must be positive");
  }
  if (p.nu < 0.0) {
    throw ConfigError("decay_model: nu must be non-negative");
  }
  std::vector<CMatrix> ops;
  ops.push_back(cplx(std::sqrt(p.lambda0 * (p.nu + 1.0))) * sigma_minus());
  ops.push_back(cplx(std::sqrt(p.lambda0 * p.nu)) * sigma_plus());
  return make_model(CMatrix::zero(2, 2), std::move(ops));
}

LindbladModel cavity_model(const CavityParams& p) {
  if (p.fock_dim < 2) {
    throw ConfigError("cavity_model: fock_dim must be >= 2");
  }
  if (p.nu < 0.0 || p.mu1 < 0.0 || p.mu2 < 0.0 || p.mu3 < 0.0) {
    throw ConfigError("cavity_model: rates must be non-negative");
  }
  if (p.kappa < 0.0 || p.kappa > 1.0) {
    throw ConfigError("cavity_model: kappa must lie in [0, 1]");
  }
  const CMatrix eye2 = CMatrix::identity(2);
  const CMatrix eye_f = CMatrix::identity(p.fock_dim);
  const CMatrix a = annihilation(p.fock_dim);
  const CMatrix a_dag = adjoint(a);

  CMatrix h = kron(eye2, a_dag * a) + kron(pauli_z(), eye_f) -
              (kron(sigma_minus(), a_dag) + kron(sigma_plus(), a));

  std::vector<CMatrix> ops;
  ops.push_back(kron(eye2, cplx(std::sqrt(p.mu1 * (p.nu + 1.0))) * a));
  ops.push_back(kron(eye2, cplx(std::sqrt(p.mu1 * p.nu)) * a_dag));
  ops.push_back(kron(cplx(std::sqrt(p.mu2 * (1.0 - p.kappa))) * sigma_minus(), eye_f));
  ops.push_back(kron(cplx(std::sqrt(p.mu2 * p.kappa)) * sigma_plus(), eye_f));
  ops.push_back(kron(cplx(std::sqrt(p.mu3)) * pauli_z(), eye_f));
  return make_model(std::move(h), std::move(ops));
}

StateVector basis_state(int dim, int k) {
  if (dim < 1 || k < 0 || k >= dim) {
    throw ConfigError("basis_state: index out of range");
  }
  StateVector psi(dim);
  psi[k] = 1.0;
  return psi;
}

StateVector plus_state() {
  const double r = 1.0 / std::sqrt(2.0);
  return StateVector{cplx(r), cplx(r)};
}

StateVector tensor(const StateVector& x, const StateVector& y) {
  StateVector out(x.size() * y.size());
  size_t idx = 0;
  for (const auto& xv : x)
    for (const auto& yv : y) out[idx++] = xv * yv;
  return out;
}

}  // namespace unravel
