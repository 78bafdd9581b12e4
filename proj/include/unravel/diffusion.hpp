#pragma once

#include <functional>
#include <string>
#include <vector>

#include "unravel/core.hpp"

namespace unravel {

// per-channel parameters of the diffusive unraveling family
//   b_k = eta_k psi + e^{i theta_k} L_k psi
//   a   = -iH psi + sum_k [ -1/2 L_k^dag L_k psi + (-1/2 |eta_k|^2 + i gamma_k) psi
//                           - e^{i theta_k} conj(eta_k) L_k psi ]
// In norm-preserving mode eta_k is derived, eta_k = i h_k - e^{i theta_k} <L_k>;
// in free mode eta_k is supplied directly. Null functions mean identically zero.
struct DiffusionChannelParams {
  std::function<double(const StateVector&)> theta;
  std::function<double(const StateVector&)> gamma;
  std::function<double(const StateVector&)> h;     // norm-preserving mode only
  std::function<cplx(const StateVector&)> eta;     // free mode only
};

struct DiffusionParams {
  bool norm_preserving = true;
  std::vector<DiffusionChannelParams> channels;
};

// workspace filled by a scheme evaluation; reuse across steps to avoid
// allocation in hot loops
struct DiffusionEval {
  StateVector drift;
  std::vector<StateVector> noise;
  std::vector<StateVector> scratch;
};

struct DiffusionScheme {
  int dim = 0;
  int noise_count = 0;
  bool norm_preserving = false;
  std::string id;
  std::function<void(const StateVector&, DiffusionEval&)> eval;

  StateVector drift_at(const StateVector& psi) const;
  StateVector noise_at(const StateVector& psi, int j) const;
};

DiffusionScheme make_lqsd(const LindbladModel& model);
DiffusionScheme make_rqsd(const LindbladModel& model);
DiffusionScheme make_cqsd(const LindbladModel& model);
DiffusionScheme make_general(const LindbladModel& model, const DiffusionParams& params);

// P_k(psi) = arg(<O L_k> - <L_k><O>), in (-pi, pi]; 0 when degenerate
double do_qsd_phase(const LindbladModel& model, const CMatrix& obs,
                    const StateVector& psi, int k);

// variance-optimal diffusive scheme for one observable:
//   e^{i theta*_k} = i e^{-i P_k}, eta*_k = -e^{i theta*_k} <L_k>
DiffusionScheme make_do_qsd(const LindbladModel& model, const CMatrix& obs);

// joint optimum for several observables: P_k = arg(sum_j w_{k,j}^2)/2 with
// w_{k,j} = <O_j L_k> - <L_k><O_j>
DiffusionScheme make_multi_do_qsd(const LindbladModel& model,
                                  const std::vector<CMatrix>& obs_list);

// per-state integrand of d/dt E<O>^2 for a scheme satisfying the unraveling
// identity:
//   2 <O psi|Lind(psi psi^dag)|O psi>
//   + sum_j [ 2 <O> <b_j|O b_j> - 2 |<O psi|b_j>|^2 + 4 (Re<O psi|b_j>)^2 ]
double dv_diffusion_integrand(const LindbladModel& model, const CMatrix& obs,
                              const DiffusionScheme& scheme, const StateVector& psi);

// max-abs residual of a psi^dag + psi a^dag + sum_j b_j b_j^dag - Lind(psi psi^dag)
double check_unraveling(const LindbladModel& model, const DiffusionScheme& scheme,
                        const StateVector& psi);

}  // namespace unravel
