#pragma once

#include "unravel/core.hpp"

namespace unravel {

// two-level atom with thermal decay and pumping:
//   L1 = sqrt(lambda0 (nu+1)) sigma_minus, L2 = sqrt(lambda0 nu) sigma_plus, H = 0
struct DecayParams {
  double lambda0 = 5.0;
  double nu = 0.5;
};
LindbladModel decay_model(const DecayParams& p = {});

// Jaynes-Cummings-type atom-cavity model on C^2 (x) C^fock_dim:
//   H = I (x) a^dag a + sigma_z (x) I - (sigma_minus (x) a^dag + sigma_plus (x) a)
//   L1 = I (x) sqrt(mu1 (nu+1)) a        L2 = I (x) sqrt(mu1 nu) a^dag
//   L3 = sqrt(mu2 (1-kappa)) sigma_minus (x) I
//   L4 = sqrt(mu2 kappa) sigma_plus (x) I
//   L5 = sqrt(mu3) sigma_z (x) I
struct CavityParams {
  double nu = 0.5;
  double kappa = 0.5;
  double mu1 = 0.2;
  double mu2 = 0.2;
  double mu3 = 0.2;
  int fock_dim = 10;
};
LindbladModel cavity_model(const CavityParams& p = {});

StateVector basis_state(int dim, int k);
StateVector plus_state();  // (|0> + |1>)/sqrt(2)
StateVector tensor(const StateVector& x, const StateVector& y);

}  // namespace unravel
