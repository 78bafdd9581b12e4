#include "unravel/diffusion.hpp"

#include <cmath>
#include <utility>

namespace unravel {

namespace {

constexpr cplx kImag(0.0, 1.0);

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

void ensure_eval(DiffusionEval& ws, int dim, int noise_count, int scratch_count) {
  ws.drift.resize(dim);
  ws.noise.resize(noise_count);
  for (auto& v : ws.noise) v.resize(dim);
  ws.scratch.resize(scratch_count);
  for (auto& v : ws.scratch) v.resize(dim);
}

double frob_scale(const CMatrix& obs, const CMatrix& op) {
  return frobenius_norm(obs) * frobenius_norm(op);
}

void require_state_dim(const StateVector& psi, int dim, const char* what) {
  if (psi.size() != static_cast<size_t>(dim)) {
    throw ConfigError(std::string(what) + ": state dimension " +
                      std::to_string(psi.size()) + " does not match scheme dimension " +
                      std::to_string(dim));
  }
}

}  // namespace

StateVector DiffusionScheme::drift_at(const StateVector& psi) const {
  DiffusionEval ws;
  eval(psi, ws);
  return ws.drift;
}

StateVector DiffusionScheme::noise_at(const StateVector& psi, int j) const {
  if (j < 0 || j >= noise_count) {
    throw ConfigError("noise_at: channel index out of range");
  }
  DiffusionEval ws;
  eval(psi, ws);
  return ws.noise[j];
}

DiffusionScheme make_lqsd(const LindbladModel& model) {
  auto core = family_core(model);
  const int nk = static_cast<int>(core.ops.size());
  DiffusionScheme s;
  s.dim = model.dim;
  s.noise_count = nk;
  s.norm_preserving = false;
  s.id = "lqsd";
  s.eval = [core = std::move(core), nk](const StateVector& psi, DiffusionEval& ws) {
    require_state_dim(psi, core.dim, "lqsd");
    ensure_eval(ws, core.dim, nk, 0);
    matvec(core.m0, psi, ws.drift);
    for (int k = 0; k < nk; ++k) matvec(core.ops[k], psi, ws.noise[k]);
  };
  return s;
}

namespace {

// shared drift of the norm-preserving family with h = 0:
//   a = m0 psi + sum_k ( conj(<L_k>) L_k psi - 1/2 |<L_k>|^2 psi )
// fills ws.scratch[k] = L_k psi and ls[k] = <L_k> as side products
void centered_drift(const FamilyCore& core, const StateVector& psi,
                    DiffusionEval& ws, std::vector<cplx>& ls) {
  const int nk = static_cast<int>(core.ops.size());
  matvec(core.m0, psi, ws.drift);
  ls.resize(nk);
  for (int k = 0; k < nk; ++k) {
    matvec(core.ops[k], psi, ws.scratch[k]);
    const cplx l = vdot(psi, ws.scratch[k]);
    ls[k] = l;
    axpy(std::conj(l), ws.scratch[k], ws.drift);
    axpy(cplx(-0.5 * std::norm(l)), psi, ws.drift);
  }
}

}  // namespace

DiffusionScheme make_rqsd(const LindbladModel& model) {
  auto core = family_core(model);
  const int nk = static_cast<int>(core.ops.size());
  DiffusionScheme s;
  s.dim = model.dim;
  s.noise_count = nk;
  s.norm_preserving = true;
  s.id = "rqsd";
  s.eval = [core = std::move(core), nk](const StateVector& psi, DiffusionEval& ws) {
    require_state_dim(psi, core.dim, "rqsd");
    ensure_eval(ws, core.dim, nk, nk);
    std::vector<cplx> ls;
    centered_drift(core, psi, ws, ls);
    for (int k = 0; k < nk; ++k) {
      const cplx l = ls[k];
      for (int i = 0; i < core.dim; ++i) {
        ws.noise[k][i] = ws.scratch[k][i] - l * psi[i];
      }
    }
  };
  return s;
}

DiffusionScheme make_cqsd(const LindbladModel& model) {
  auto core = family_core(model);
  const int nk = static_cast<int>(core.ops.size());
  DiffusionScheme s;
  s.dim = model.dim;
  s.noise_count = 2 * nk;
  s.norm_preserving = true;
  s.id = "cqsd";
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  s.eval = [core = std::move(core), nk, inv_sqrt2](const StateVector& psi,
                                                   DiffusionEval& ws) {
    require_state_dim(psi, core.dim, "cqsd");
    ensure_eval(ws, core.dim, 2 * nk, nk);
    std::vector<cplx> ls;
    centered_drift(core, psi, ws, ls);
    for (int k = 0; k < nk; ++k) {
      const cplx l = ls[k];
      for (int i = 0; i < core.dim; ++i) {
        const cplx b = (ws.scratch[k][i] - l * psi[i]) * inv_sqrt2;
        ws.noise[2 * k][i] = b;
        ws.noise[2 * k + 1][i] = kImag * b;
      }
    }
  };
  return s;
}

DiffusionScheme make_general(const LindbladModel& model, const DiffusionParams& params) {
  const int nk = static_cast<int>(model.lindblad_ops.size());
  if (static_cast<int>(params.channels.size()) != nk) {
    throw ConfigError("make_general: expected " + std::to_string(nk) +
                      " channel parameter sets, got " +
                      std::to_string(params.channels.size()));
  }
  if (params.norm_preserving) {
    for (const auto& ch : params.channels) {
      if (ch.eta) {
        throw ConfigError(
            "make_general: eta must not be set in norm-preserving mode");
      }
    }
  } else {
    for (const auto& ch : params.channels) {
      if (ch.h) {
        throw ConfigError("make_general: h is only meaningful in norm-preserving mode");
      }
    }
  }
  auto core = family_core(model);
  DiffusionScheme s;
  s.dim = model.dim;
  s.noise_count = nk;
  s.norm_preserving = params.norm_preserving;
  s.id = "general";
  s.eval = [core = std::move(core), params, nk](const StateVector& psi,
                                                DiffusionEval& ws) {
    require_state_dim(psi, core.dim, "general diffusion scheme");
    ensure_eval(ws, core.dim, nk, nk);
    matvec(core.m0, psi, ws.drift);
    for (int k = 0; k < nk; ++k) {
      const auto& ch = params.channels[k];
      matvec(core.ops[k], psi, ws.scratch[k]);
      const double theta = ch.theta ? ch.theta(psi) : 0.0;
      const double gamma = ch.gamma ? ch.gamma(psi) : 0.0;
      const cplx phase = std::polar(1.0, theta);
      cplx eta;
      if (params.norm_preserving) {
        const double h = ch.h ? ch.h(psi) : 0.0;
        eta = kImag * h - phase * vdot(psi, ws.scratch[k]);
      } else {
        eta = ch.eta ? ch.eta(psi) : cplx{};
      }
      for (int i = 0; i < core.dim; ++i) {
        ws.noise[k][i] = eta * psi[i] + phase * ws.scratch[k][i];
      }
      axpy(cplx(-0.5 * std::norm(eta), gamma), psi, ws.drift);
      axpy(-phase * std::conj(eta), ws.scratch[k], ws.drift);
    }
  };
  return s;
}

double do_qsd_phase(const LindbladModel& model, const CMatrix& obs,
                    const StateVector& psi, int k) {
  if (k < 0 || k >= static_cast<int>(model.lindblad_ops.size())) {
    throw ConfigError("do_qsd_phase: channel index out of range");
  }
  require_hermitian(obs, 1e-12, "do_qsd_phase: observable");
  const StateVector opsi = matvec(obs, psi);
  const StateVector lpsi = matvec(model.lindblad_ops[k], psi);
  const double o = vdot(psi, opsi).real();
  const cplx w = vdot(opsi, lpsi) - vdot(psi, lpsi) * o;
  const double scale = frob_scale(obs, model.lindblad_ops[k]);
  if (std::abs(w) <= 1e-14 * scale) return 0.0;
  return std::arg(w);
}

DiffusionScheme make_do_qsd(const LindbladModel& model, const CMatrix& obs) {
  require_hermitian(obs, 1e-12, "make_do_qsd: observable");
  if (obs.rows != model.dim) {
    throw ConfigError("make_do_qsd: observable dimension mismatch");
  }
  auto core = family_core(model);
  const int nk = static_cast<int>(core.ops.size());
  std::vector<double> scales(nk);
  for (int k = 0; k < nk; ++k) scales[k] = frob_scale(obs, core.ops[k]);
  DiffusionScheme s;
  s.dim = model.dim;
  s.noise_count = nk;
  s.norm_preserving = true;
  s.id = "do_qsd";
  s.eval = [core = std::move(core), obs, scales, nk](const StateVector& psi,
                                                     DiffusionEval& ws) {
    require_state_dim(psi, core.dim, "do_qsd");
    ensure_eval(ws, core.dim, nk, nk + 1);
    StateVector& opsi = ws.scratch[nk];
    matvec(obs, psi, opsi);
    const double o = vdot(psi, opsi).real();
    matvec(core.m0, psi, ws.drift);
    for (int k = 0; k < nk; ++k) {
      matvec(core.ops[k], psi, ws.scratch[k]);
      const cplx l = vdot(psi, ws.scratch[k]);
      const cplx w = vdot(opsi, ws.scratch[k]) - l * o;
      // e^{i theta*} = i e^{-i P}, P = arg(w); degenerate w -> P = 0
      const double r = std::abs(w);
      const cplx phase = (r <= 1e-14 * scales[k]) ? kImag : kImag * std::conj(w) / r;
      for (int i = 0; i < core.dim; ++i) {
        ws.noise[k][i] = phase * (ws.scratch[k][i] - l * psi[i]);
      }
      axpy(std::conj(l), ws.scratch[k], ws.drift);
      axpy(cplx(-0.5 * std::norm(l)), psi, ws.drift);
    }
  };
  return s;
}

DiffusionScheme make_multi_do_qsd(const LindbladModel& model,
                                  const std::vector<CMatrix>& obs_list) {
  if (obs_list.empty()) {
    throw ConfigError("make_multi_do_qsd: observable list is empty");
  }
  for (const auto& obs : obs_list) {
    require_hermitian(obs, 1e-12, "make_multi_do_qsd: observable");
    if (obs.rows != model.dim) {
      throw ConfigError("make_multi_do_qsd: observable dimension mismatch");
    }
  }
  auto core = family_core(model);
  const int nk = static_cast<int>(core.ops.size());
  const int nobs = static_cast<int>(obs_list.size());
  std::vector<double> scales2(nk, 0.0);  // sum_j (|O_j| |L_k|)^2
  for (int k = 0; k < nk; ++k) {
    for (const auto& obs : obs_list) {
      const double sc = frob_scale(obs, core.ops[k]);
      scales2[k] += sc * sc;
    }
  }
  DiffusionScheme s;
  s.dim = model.dim;
  s.noise_count = nk;
  s.norm_preserving = true;
  s.id = "multi_do_qsd";
  s.eval = [core = std::move(core), obs_list, scales2, nk,
            nobs](const StateVector& psi, DiffusionEval& ws) {
    require_state_dim(psi, core.dim, "multi_do_qsd");
    ensure_eval(ws, core.dim, nk, nk + nobs);
    std::vector<double> os(nobs);
    for (int j = 0; j < nobs; ++j) {
      matvec(obs_list[j], psi, ws.scratch[nk + j]);
      os[j] = vdot(psi, ws.scratch[nk + j]).real();
    }
    matvec(core.m0, psi, ws.drift);
    for (int k = 0; k < nk; ++k) {
      matvec(core.ops[k], psi, ws.scratch[k]);
      const cplx l = vdot(psi, ws.scratch[k]);
      cplx sum{};
      for (int j = 0; j < nobs; ++j) {
        const cplx w = vdot(ws.scratch[nk + j], ws.scratch[k]) - l * os[j];
        sum += w * w;
      }
      // e^{i theta*} = i e^{-i P}, P = arg(sum_j w_j^2)/2
      cplx phase;
      if (std::abs(sum) <= 1e-14 * scales2[k]) {
        phase = kImag;
      } else {
        phase = kImag * std::polar(1.0, -0.5 * std::arg(sum));
      }
      for (int i = 0; i < core.dim; ++i) {
        ws.noise[k][i] = phase * (ws.scratch[k][i] - l * psi[i]);
      }
      axpy(std::conj(l), ws.scratch[k], ws.drift);
      axpy(cplx(-0.5 * std::norm(l)), psi, ws.drift);
    }
  };
  return s;
}

double dv_diffusion_integrand(const LindbladModel& model, const CMatrix& obs,
                              const DiffusionScheme& scheme, const StateVector& psi) {
  require_hermitian(obs, 1e-12, "dv_diffusion_integrand: observable");
  if (scheme.dim != model.dim || obs.rows != model.dim) {
    throw ConfigError("dv_diffusion_integrand: dimension mismatch");
  }
  if (std::abs(vnorm(psi) - 1.0) > 1e-10) {
    throw ConfigError("dv_diffusion_integrand: state is not unit norm");
  }
  DiffusionEval ws;
  scheme.eval(psi, ws);
  const StateVector opsi = matvec(obs, psi);
  const double o = vdot(psi, opsi).real();
  const DensityMatrix lind = apply_generator(model, outer(psi, psi));
  double total = 2.0 * vdot(opsi, matvec(lind, opsi)).real();
  for (int j = 0; j < scheme.noise_count; ++j) {
    const StateVector& b = ws.noise[j];
    const double b_ob = vdot(b, matvec(obs, b)).real();
    const cplx ob = vdot(opsi, b);
    total += 2.0 * o * b_ob - 2.0 * std::norm(ob) +
             4.0 * ob.real() * ob.real();
  }
  return total;
}

double check_unraveling(const LindbladModel& model, const DiffusionScheme& scheme,
                        const StateVector& psi) {
  if (scheme.dim != model.dim) {
    throw ConfigError("check_unraveling: dimension mismatch");
  }
  DiffusionEval ws;
  scheme.eval(psi, ws);
  const CMatrix a_part = outer(ws.drift, psi);
  CMatrix resid = a_part + adjoint(a_part) - apply_generator(model, outer(psi, psi));
  for (int j = 0; j < scheme.noise_count; ++j) {
    resid = resid + outer(ws.noise[j], ws.noise[j]);
  }
  return max_abs(resid);
}

}  // namespace unravel
