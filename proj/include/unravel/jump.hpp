#pragma once

#include <functional>
#include <string>
#include <vector>

#include "unravel/core.hpp"

namespace unravel {

// per-channel parameters of the jump unraveling family
//   lambda_k = <L_k^dag L_k> - |<L_k>|^2 + alpha_k          (jump rate)
//   eta_k    = e^{i beta_k} sqrt(alpha_k) - e^{i theta_k} <L_k> - sqrt(lambda_k)
//   b_k      = (eta_k psi + e^{i theta_k} L_k psi) / sqrt(lambda_k)
//   a        = -iH psi - 1/2 sum_k L_k^dag L_k psi
//              + sum_k [ (-1/2 |eta_k|^2 + i gamma_k) psi
//                        - e^{i theta_k} conj(eta_k) L_k psi
//                        - sqrt(lambda_k) (eta_k psi + e^{i theta_k} L_k psi) ]
// Null functions mean identically zero. alpha_k(psi) must be >= 0.
struct JumpChannelParams {
  std::function<double(const StateVector&)> alpha;
  std::function<double(const StateVector&)> beta;
  std::function<double(const StateVector&)> theta;
  std::function<double(const StateVector&)> gamma;
};

struct JumpParams {
  std::vector<JumpChannelParams> channels;
  double rate_cap = 0.0;  // informational; set by make_do_qjp
};

struct JumpEval {
  StateVector drift;
  std::vector<double> rates;
  StateVector jump;  // filled by eval_jump
  std::vector<StateVector> scratch;
};

struct JumpScheme {
  int dim = 0;
  int channel_count = 0;
  std::string id;
  std::function<void(const StateVector&, JumpEval&)> eval_drift_rates;
  std::function<void(const StateVector&, int, JumpEval&)> eval_jump;

  StateVector drift_at(const StateVector& psi) const;
  std::vector<double> rates_at(const StateVector& psi) const;
  StateVector jump_at(const StateVector& psi, int k) const;
};

// standard quantum jump process: lambda_k = <L_k^dag L_k>,
// jump target psi + b_k = L_k psi / |L_k psi|
JumpScheme make_qjp(const LindbladModel& model);

JumpScheme make_general_jump(const LindbladModel& model, const JumpParams& params);

// phase minimizing |A cos(t) + B sin(t) + C|^2, in (-pi, pi];
// minimal value is (max{0, |C| - sqrt(A^2+B^2)})^2
double theta_abc(double a, double b, double c);

struct AbcCoefficients {
  double a_coef = 0.0;
  double b_coef = 0.0;
  double c_coef = 0.0;
  double g_factor = 0.0;  // G = sqrt(1 + (|<L>|^2 - <L^dag L>)/lambda)
};

// coefficients of the jump loss term T3 = A cos(theta) + B sin(theta) + C at
// fixed rate lambda, with w = <O L_k> - <L_k><O>:
//   A = (2G/sqrt(lambda)) Re(w),  B = -(2G/sqrt(lambda)) Im(w)
//   C = (2|<L>|^2<O> - <L^dag L><O> + <L^dag O L> - 2 Re(conj(<L>)<O L>)) / lambda
AbcCoefficients abc_coefficients(const LindbladModel& model, const CMatrix& obs,
                                 int k, const StateVector& psi, double lambda);

// variance-optimal jump scheme at rate cap Lambda; each channel is optimized
// independently with beta = gamma = 0, lambda = max(Lambda, Y + 1e-14),
// theta from theta_abc
JumpScheme make_do_qjp(const LindbladModel& model, const CMatrix& obs,
                       double rate_cap);

// per-state integrand of d/dt E<O>^2 for the single-channel jump family:
//   2 <O psi|Lind(psi psi^dag)|O psi> + 2 <L psi|O L psi><O> - 2 |<O psi|L psi>|^2
//   + lambda * T3^2,   T3 = <b|O b> + (2/sqrt(lambda)) (Re(eta) <O> + Re(e^{i theta} <O psi|L psi>))
// inert channels (lambda <= 1e-14) contribute no loss term
double dv_jump_integrand(const LindbladModel& model, const CMatrix& obs,
                         const JumpParams& params, const StateVector& psi);

// max of the three residuals: |2 Re<psi|a>|, max_k | |b_k + psi| - 1 | over
// active channels, and the max-abs defect of the jump unraveling identity
double check_jump(const LindbladModel& model, const JumpScheme& scheme,
                  const StateVector& psi);

}  // namespace unravel
