#include "unravel/jump.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <utility>

namespace unravel {

namespace {

struct FamilyCore {
  int dim = 0;
  CMatrix m0;  // -iH - 1/2 sum_k L_k^dag L_k
  std::vector<CMatrix> ops;
};

FamilyCore family_core(const LindbladModel& model) {
  FamilyCore core;
  core.dim = model.dim;
  core.ops = model.lindblad_ops;
  CMatrix m0 = cplx(0.0, -1.0) * model.hamiltonian;
  for (const auto& op : model.lindblad_ops) {
    m0 = m0 - cplx(0.5) * (adjoint(op) * op);
  }
  core.m0 = std::move(m0);
  return core;
}

void ensure_eval(JumpEval& ws, int dim, int channel_count) {
  ws.drift.resize(dim);
  ws.rates.resize(channel_count);
  ws.jump.resize(dim);
  if (ws.scratch.empty()) ws.scratch.resize(1);
  ws.scratch[0].resize(dim);
}

void require_state_dim(const StateVector& psi, int dim, const char* what) {
  if (psi.size() != static_cast<size_t>(dim)) {
    throw ConfigError(std::string(what) + ": state dimension " +
                      std::to_string(psi.size()) + " does not match scheme dimension " +
                      std::to_string(dim));
  }
}

// per-channel quantities of the general jump family; fills lpsi = L_k psi
struct ChannelQuantities {
  cplx l;              // <L_k>
  double q = 0.0;      // <L_k^dag L_k>
  double lambda = 0.0; // rate, clamped at zero
  double root = 0.0;   // sqrt(lambda)
  cplx eta;
  cplx phase;          // e^{i theta}
  double gamma = 0.0;
};

ChannelQuantities channel_quantities(const CMatrix& op, const JumpChannelParams& ch,
                                     const StateVector& psi, int k,
                                     StateVector& lpsi) {
  matvec(op, psi, lpsi);
  ChannelQuantities cq;
  cq.q = norm2(lpsi);
  cq.l = vdot(psi, lpsi);
  const double alpha = ch.alpha ? ch.alpha(psi) : 0.0;
  if (!(alpha >= 0.0)) {
    throw NumericError("jump channel " + std::to_string(k) + ": alpha(psi) = " +
                       std::to_string(alpha) + " must be nonnegative");
  }
  const double beta = ch.beta ? ch.beta(psi) : 0.0;
  const double theta = ch.theta ? ch.theta(psi) : 0.0;
  cq.gamma = ch.gamma ? ch.gamma(psi) : 0.0;
  cq.phase = std::polar(1.0, theta);
  double lambda = cq.q - std::norm(cq.l) + alpha;
  if (lambda < -1e-12 * std::max(1.0, cq.q)) {
    throw NumericError("jump channel " + std::to_string(k) + ": negative rate " +
                       std::to_string(lambda));
  }
  cq.lambda = std::max(lambda, 0.0);
  cq.root = std::sqrt(cq.lambda);
  cq.eta = std::polar(std::sqrt(alpha), beta) - cq.phase * cq.l - cq.root;
  return cq;
}

}  // namespace

StateVector JumpScheme::drift_at(const StateVector& psi) const {
  JumpEval ws;
  eval_drift_rates(psi, ws);
  return ws.drift;
}

std::vector<double> JumpScheme::rates_at(const StateVector& psi) const {
  JumpEval ws;
  eval_drift_rates(psi, ws);
  return ws.rates;
}

StateVector JumpScheme::jump_at(const StateVector& psi, int k) const {
  JumpEval ws;
  eval_jump(psi, k, ws);
  return ws.jump;
}

JumpScheme make_qjp(const LindbladModel& model) {
  auto core = std::make_shared<const FamilyCore>(family_core(model));
  const int nk = static_cast<int>(core->ops.size());
  JumpScheme s;
  s.dim = model.dim;
  s.channel_count = nk;
  s.id = "qjp";
  s.eval_drift_rates = [core, nk](const StateVector& psi, JumpEval& ws) {
    require_state_dim(psi, core->dim, "qjp");
    ensure_eval(ws, core->dim, nk);
    matvec(core->m0, psi, ws.drift);
    StateVector& lpsi = ws.scratch[0];
    double p = 0.0;
    for (int k = 0; k < nk; ++k) {
      matvec(core->ops[k], psi, lpsi);
      const double q = norm2(lpsi);
      ws.rates[k] = (std::sqrt(q) <= 1e-14) ? 0.0 : q;
      p += ws.rates[k];
    }
    axpy(cplx(0.5 * p), psi, ws.drift);
  };
  s.eval_jump = [core, nk](const StateVector& psi, int k, JumpEval& ws) {
    if (k < 0 || k >= nk) {
      throw ConfigError("qjp: jump channel index out of range");
    }
    require_state_dim(psi, core->dim, "qjp");
    ensure_eval(ws, core->dim, nk);
    StateVector& lpsi = ws.scratch[0];
    matvec(core->ops[k], psi, lpsi);
    const double nrm = vnorm(lpsi);
    if (nrm <= 1e-14) {
      std::fill(ws.jump.begin(), ws.jump.end(), cplx{});
      return;
    }
    const double inv = 1.0 / nrm;
    for (int i = 0; i < core->dim; ++i) ws.jump[i] = lpsi[i] * inv - psi[i];
  };
  return s;
}

JumpScheme make_general_jump(const LindbladModel& model, const JumpParams& params) {
  const int nk = static_cast<int>(model.lindblad_ops.size());
  if (static_cast<int>(params.channels.size()) != nk) {
    throw ConfigError("make_general_jump: expected " + std::to_string(nk) +
                      " channel parameter sets, got " +
                      std::to_string(params.channels.size()));
  }
  auto core = std::make_shared<const FamilyCore>(family_core(model));
  auto shared_params = std::make_shared<const JumpParams>(params);
  JumpScheme s;
  s.dim = model.dim;
  s.channel_count = nk;
  s.id = "general_jump";
  s.eval_drift_rates = [core, shared_params, nk](const StateVector& psi,
                                                 JumpEval& ws) {
    require_state_dim(psi, core->dim, "general jump scheme");
    ensure_eval(ws, core->dim, nk);
    matvec(core->m0, psi, ws.drift);
    StateVector& lpsi = ws.scratch[0];
    for (int k = 0; k < nk; ++k) {
      const auto cq =
          channel_quantities(core->ops[k], shared_params->channels[k], psi, k, lpsi);
      ws.rates[k] = cq.lambda;
      axpy(cplx(-0.5 * std::norm(cq.eta), cq.gamma) - cq.root * cq.eta, psi,
           ws.drift);
      axpy(-cq.phase * (std::conj(cq.eta) + cq.root), lpsi, ws.drift);
    }
  };
  s.eval_jump = [core, shared_params, nk](const StateVector& psi, int k,
                                          JumpEval& ws) {
    if (k < 0 || k >= nk) {
      throw ConfigError("general jump scheme: jump channel index out of range");
    }
    require_state_dim(psi, core->dim, "general jump scheme");
    ensure_eval(ws, core->dim, nk);
    StateVector& lpsi = ws.scratch[0];
    const auto cq =
        channel_quantities(core->ops[k], shared_params->channels[k], psi, k, lpsi);
    if (cq.lambda <= 1e-14) {
      std::fill(ws.jump.begin(), ws.jump.end(), cplx{});
      return;
    }
    const double inv = 1.0 / cq.root;
    for (int i = 0; i < core->dim; ++i) {
      ws.jump[i] = (cq.eta * psi[i] + cq.phase * lpsi[i]) * inv;
    }
  };
  return s;
}

double theta_abc(double a, double b, double c) {
  const double r2 = a * a + b * b;
  if (r2 == 0.0) return 0.0;
  const double r = std::sqrt(r2);
  const double denom_arg = std::atan2(-b, a);  // arg(A - iB)
  double num_arg;
  if (r >= std::abs(c)) {
    num_arg = std::atan2(std::sqrt(std::max(0.0, r2 - c * c)), -c);
  } else {
    num_arg = (c > 0.0) ? std::numbers::pi : 0.0;  // arg(sign(-C))
  }
  double theta = num_arg - denom_arg;
  if (theta > std::numbers::pi) theta -= 2.0 * std::numbers::pi;
  if (theta <= -std::numbers::pi) theta += 2.0 * std::numbers::pi;
  return theta;
}

AbcCoefficients abc_coefficients(const LindbladModel& model, const CMatrix& obs,
                                 int k, const StateVector& psi, double lambda) {
  if (k < 0 || k >= static_cast<int>(model.lindblad_ops.size())) {
    throw ConfigError("abc_coefficients: channel index out of range");
  }
  require_hermitian(obs, 1e-12, "abc_coefficients: observable");
  if (obs.rows != model.dim) {
    throw ConfigError("abc_coefficients: observable dimension mismatch");
  }
  require_state_dim(psi, model.dim, "abc_coefficients");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw NumericError("abc_coefficients: rate must be positive and finite");
  }
  const StateVector lpsi = matvec(model.lindblad_ops[k], psi);
  const StateVector opsi = matvec(obs, psi);
  const double q = norm2(lpsi);
  const cplx l = vdot(psi, lpsi);
  const double o = vdot(psi, opsi).real();
  const cplx m = vdot(opsi, lpsi);  // <O L>
  const cplx w = m - l * o;
  const double g2 = 1.0 + (std::norm(l) - q) / lambda;
  if (g2 < -1e-12) {
    throw NumericError("abc_coefficients: rate below the minimum feasible value");
  }
  AbcCoefficients abc;
  abc.g_factor = std::sqrt(std::max(g2, 0.0));
  const double scale = 2.0 * abc.g_factor / std::sqrt(lambda);
  abc.a_coef = scale * w.real();
  abc.b_coef = -scale * w.imag();
  const double lol = vdot(lpsi, matvec(obs, lpsi)).real();  // <L^dag O L>
  abc.c_coef =
      (2.0 * std::norm(l) * o - q * o + lol - 2.0 * (std::conj(l) * m).real()) /
      lambda;
  return abc;
}

JumpScheme make_do_qjp(const LindbladModel& model, const CMatrix& obs,
                       double rate_cap) {
  if (!(rate_cap > 0.0)) {
    throw ConfigError("make_do_qjp: rate cap must be positive");
  }
  require_hermitian(obs, 1e-12, "make_do_qjp: observable");
  if (obs.rows != model.dim) {
    throw ConfigError("make_do_qjp: observable dimension mismatch");
  }
  auto shared_model = std::make_shared<const LindbladModel>(model);
  auto shared_obs = std::make_shared<const CMatrix>(obs);
  const int nk = static_cast<int>(model.lindblad_ops.size());
  JumpParams params;
  params.rate_cap = rate_cap;
  params.channels.resize(nk);
  for (int k = 0; k < nk; ++k) {
    params.channels[k].alpha = [shared_model, rate_cap,
                                k](const StateVector& psi) {
      const StateVector lpsi = matvec(shared_model->lindblad_ops[k], psi);
      const double y = norm2(lpsi) - std::norm(vdot(psi, lpsi));
      return std::max(rate_cap, y + 1e-14) - y;
    };
    params.channels[k].theta = [shared_model, shared_obs, rate_cap,
                                k](const StateVector& psi) {
      const StateVector lpsi = matvec(shared_model->lindblad_ops[k], psi);
      const double y = norm2(lpsi) - std::norm(vdot(psi, lpsi));
      const double lambda = std::max(rate_cap, y + 1e-14);
      const auto abc = abc_coefficients(*shared_model, *shared_obs, k, psi, lambda);
      return theta_abc(abc.a_coef, abc.b_coef, abc.c_coef);
    };
  }
  JumpScheme s = make_general_jump(model, params);
  s.id = "do_qjp";
  return s;
}

double dv_jump_integrand(const LindbladModel& model, const CMatrix& obs,
                         const JumpParams& params, const StateVector& psi) {
  if (model.lindblad_ops.size() != 1 || params.channels.size() != 1) {
    throw ConfigError("dv_jump_integrand: single-channel schemes only");
  }
  require_hermitian(obs, 1e-12, "dv_jump_integrand: observable");
  if (obs.rows != model.dim) {
    throw ConfigError("dv_jump_integrand: observable dimension mismatch");
  }
  require_state_dim(psi, model.dim, "dv_jump_integrand");
  if (std::abs(vnorm(psi) - 1.0) > 1e-10) {
    throw ConfigError("dv_jump_integrand: state is not unit norm");
  }
  StateVector lpsi(model.dim);
  const auto cq = channel_quantities(model.lindblad_ops[0], params.channels[0],
                                     psi, 0, lpsi);
  const StateVector opsi = matvec(obs, psi);
  const double o = vdot(psi, opsi).real();
  const DensityMatrix lind = apply_generator(model, outer(psi, psi));
  const cplx ol = vdot(opsi, lpsi);  // <O psi|L psi>
  double total = 2.0 * vdot(opsi, matvec(lind, opsi)).real() +
                 2.0 * vdot(lpsi, matvec(obs, lpsi)).real() * o -
                 2.0 * std::norm(ol);
  if (cq.lambda <= 1e-14) return total;
  StateVector b(model.dim);
  const double inv = 1.0 / cq.root;
  for (int i = 0; i < model.dim; ++i) {
    b[i] = (cq.eta * psi[i] + cq.phase * lpsi[i]) * inv;
  }
  const double t3 = vdot(b, matvec(obs, b)).real() +
                    2.0 * inv * (cq.eta.real() * o + (cq.phase * ol).real());
  return total + cq.lambda * t3 * t3;
}

double check_jump(const LindbladModel& model, const JumpScheme& scheme,
                  const StateVector& psi) {
  if (scheme.dim != model.dim) {
    throw ConfigError("check_jump: dimension mismatch");
  }
  JumpEval ws;
  scheme.eval_drift_rates(psi, ws);
  const double r1 = std::abs(2.0 * vdot(psi, ws.drift).real());
  const CMatrix a_part = outer(ws.drift, psi);
  CMatrix resid = a_part + adjoint(a_part) - apply_generator(model, outer(psi, psi));
  double r2 = 0.0;
  for (int k = 0; k < scheme.channel_count; ++k) {
    const double rate = ws.rates[k];
    if (rate <= 1e-14) continue;
    JumpEval jws;
    scheme.eval_jump(psi, k, jws);
    StateVector shifted = jws.jump;
    axpy(cplx(1.0), psi, shifted);
    if (rate > 1e-12) {
      r2 = std::max(r2, std::abs(vnorm(shifted) - 1.0));
    }
    const CMatrix b_part = outer(jws.jump, psi);
    resid = resid + cplx(rate) * (b_part + adjoint(b_part) + outer(jws.jump, jws.jump));
  }
  return std::max({r1, r2, max_abs(resid)});
}

}  // namespace unravel
