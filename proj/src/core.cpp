#include "unravel/core.hpp"

#include <lapacke.h>

#include <cmath>
#include <utility>

#include "unravel/rng.hpp"

namespace unravel {

namespace {

void require_same_shape(const CMatrix& x, const CMatrix& y, const char* what) {
  if (x.rows != y.rows || x.cols != y.cols) {
    throw ConfigError(std::string(what) + ": shape mismatch (" +
                      std::to_string(x.rows) + "x" + std::to_string(x.cols) +
                      " vs " + std::to_string(y.rows) + "x" +
                      std::to_string(y.cols) + ")");
  }
}

void require_square(const CMatrix& m, const char* what) {
  if (m.rows != m.cols || m.rows == 0) {
    throw ConfigError(std::string(what) + ": matrix must be square, got " +
                      std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
}

}  // namespace

CMatrix CMatrix::identity(int n) {
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix operator+(const CMatrix& x, const CMatrix& y) {
  require_same_shape(x, y, "matrix add");
  CMatrix r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

CMatrix operator-(const CMatrix& x, const CMatrix& y) {
  require_same_shape(x, y, "matrix subtract");
  CMatrix r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

CMatrix operator*(const CMatrix& x, const CMatrix& y) {
  if (x.cols != y.rows) {
    throw ConfigError("matrix multiply: inner dimension mismatch (" +
                      std::to_string(x.cols) + " vs " + std::to_string(y.rows) +
                      ")");
  }
  CMatrix r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      const cplx xv = x(i, k);
      if (xv == cplx{}) continue;
      for (int j = 0; j < y.cols; ++j) r(i, j) += xv * y(k, j);
    }
  }
  return r;
}

CMatrix operator*(cplx s, const CMatrix& x) {
  CMatrix r = x;
  for (auto& v : r.a) v *= s;
  return r;
}

CMatrix adjoint(const CMatrix& m) {
  CMatrix r(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r(j, i) = std::conj(m(i, j));
  return r;
}

CMatrix transpose(const CMatrix& m) {
  CMatrix r(m.cols, m.rows);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) r(j, i) = m(i, j);
  return r;
}

CMatrix conjugate(const CMatrix& m) {
  CMatrix r = m;
  for (auto& v : r.a) v = std::conj(v);
  return r;
}

CMatrix kron(const CMatrix& x, const CMatrix& y) {
  CMatrix r(x.rows * y.rows, x.cols * y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) {
      const cplx xv = x(i, j);
      if (xv == cplx{}) continue;
      for (int k = 0; k < y.rows; ++k)
        for (int l = 0; l < y.cols; ++l)
          r(i * y.rows + k, j * y.cols + l) = xv * y(k, l);
    }
  return r;
}

cplx trace(const CMatrix& m) {
  require_square(m, "trace");
  cplx t = 0.0;
  for (int i = 0; i < m.rows; ++i) t += m(i, i);
  return t;
}

double max_abs(const CMatrix& m) {
  double r = 0.0;
  for (const auto& v : m.a) r = std::max(r, std::abs(v));
  return r;
}

double frobenius_norm(const CMatrix& m) {
  double s = 0.0;
  for (const auto& v : m.a) s += std::norm(v);
  return std::sqrt(s);
}

double one_norm(const CMatrix& m) {
  double r = 0.0;
  for (int j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < m.rows; ++i) s += std::abs(m(i, j));
    r = std::max(r, s);
  }
  return r;
}

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows != m.cols) return false;
  for (int i = 0; i < m.rows; ++i)
    for (int j = i; j < m.cols; ++j)
      if (std::abs(m(i, j) - std::conj(m(j, i))) > tol) return false;
  return true;
}

void require_hermitian(const CMatrix& m, double tol, const std::string& what) {
  if (!is_hermitian(m, tol)) {
    throw ConfigError(what + ": matrix is not Hermitian (tolerance " +
                      std::to_string(tol) + ")");
  }
}

void matvec(const CMatrix& m, const StateVector& x, StateVector& out) {
  if (static_cast<size_t>(m.cols) != x.size()) {
    throw ConfigError("matvec: dimension mismatch (" + std::to_string(m.cols) +
                      " vs " + std::to_string(x.size()) + ")");
  }
  out.resize(m.rows);
  const cplx* row = m.a.data();
  for (int i = 0; i < m.rows; ++i, row += m.cols) {
    cplx s = 0.0;
    for (int j = 0; j < m.cols; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

StateVector matvec(const CMatrix& m, const StateVector& x) {
  StateVector out;
  matvec(m, x, out);
  return out;
}

cplx vdot(const StateVector& x, const StateVector& y) {
  if (x.size() != y.size()) {
    throw ConfigError("vdot: dimension mismatch");
  }
  cplx s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += std::conj(x[i]) * y[i];
  return s;
}

double norm2(const StateVector& x) {
  double s = 0.0;
  for (const auto& v : x) s += std::norm(v);
  return s;
}

double vnorm(const StateVector& x) { return std::sqrt(norm2(x)); }

void normalize(StateVector& x) {
  const double n = vnorm(x);
  if (!(n > 1e-300)) {
    throw NumericError("cannot normalize a (near-)zero state vector");
  }
  const double inv = 1.0 / n;
  for (auto& v : x) v *= inv;
}

void axpy(cplx s, const StateVector& x, StateVector& y) {
  if (x.size() != y.size()) {
    throw ConfigError("axpy: dimension mismatch");
  }
  for (size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

CMatrix outer(const StateVector& x, const StateVector& y) {
  CMatrix r(static_cast<int>(x.size()), static_cast<int>(y.size()));
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = 0; j < y.size(); ++j)
      r(static_cast<int>(i), static_cast<int>(j)) = x[i] * std::conj(y[j]);
  return r;
}

CMatrix pauli_x() {
  CMatrix m(2, 2);
  m(0, 1) = 1.0;
  m(1, 0) = 1.0;
  return m;
}

CMatrix pauli_y() {
  CMatrix m(2, 2);
  m(0, 1) = cplx(0.0, -1.0);
  m(1, 0) = cplx(0.0, 1.0);
  return m;
}

CMatrix pauli_z() {
  CMatrix m(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = -1.0;
  return m;
}

CMatrix sigma_plus() {
  CMatrix m(2, 2);
  m(0, 1) = 1.0;
  return m;
}

CMatrix sigma_minus() {
  CMatrix m(2, 2);
  m(1, 0) = 1.0;
  return m;
}

CMatrix annihilation(int fock_dim) {
  if (fock_dim < 2) {
    throw ConfigError("annihilation: fock_dim must be >= 2, got " +
                      std::to_string(fock_dim));
  }
  CMatrix m(fock_dim, fock_dim);
  for (int n = 0; n + 1 < fock_dim; ++n) m(n, n + 1) = std::sqrt(n + 1.0);
  return m;
}

CMatrix number_op(int fock_dim) {
  if (fock_dim < 2) {
    throw ConfigError("number_op: fock_dim must be >= 2, got " +
                      std::to_string(fock_dim));
  }
  CMatrix m(fock_dim, fock_dim);
  for (int n = 0; n < fock_dim; ++n) m(n, n) = static_cast<double>(n);
  return m;
}

LindbladModel make_model(CMatrix hamiltonian, std::vector<CMatrix> lindblad_ops) {
  require_square(hamiltonian, "make_model");
  require_hermitian(hamiltonian, 1e-12, "make_model: Hamiltonian");
  const int dim = hamiltonian.rows;
  for (size_t k = 0; k < lindblad_ops.size(); ++k) {
    const auto& op = lindblad_ops[k];
    if (op.rows != dim || op.cols != dim) {
      throw ConfigError("make_model: Lindblad operator " + std::to_string(k) +
                        " has shape " + std::to_string(op.rows) + "x" +
                        std::to_string(op.cols) + ", expected " +
                        std::to_string(dim) + "x" + std::to_string(dim));
    }
  }
  return LindbladModel{dim, std::move(hamiltonian), std::move(lindblad_ops)};
}

DensityMatrix apply_generator(const LindbladModel& model, const DensityMatrix& rho) {
  require_square(rho, "apply_generator");
  if (rho.rows != model.dim) {
    throw ConfigError("apply_generator: state dimension " +
                      std::to_string(rho.rows) + " does not match model dimension " +
                      std::to_string(model.dim));
  }
  const cplx mi(0.0, -1.0);
  CMatrix out = mi * (model.hamiltonian * rho - rho * model.hamiltonian);
  for (const auto& op : model.lindblad_ops) {
    const CMatrix op_dag = adjoint(op);
    const CMatrix q = op_dag * op;  // L^dag L
    out = out + op * rho * op_dag - 0.5 * (q * rho + rho * q);
  }
  return out;
}

double expectation(const CMatrix& obs, const StateVector& psi) {
  if (static_cast<size_t>(obs.cols) != psi.size() || obs.rows != obs.cols) {
    throw ConfigError("expectation: dimension mismatch");
  }
  const cplx v = vdot(psi, matvec(obs, psi));
  const double scale = 1.0 + frobenius_norm(obs) * norm2(psi);
  if (std::abs(v.imag()) > 1e-10 * scale) {
    throw NumericError("expectation: non-real value " + std::to_string(v.imag()) +
                       " (observable not Hermitian?)");
  }
  return v.real();
}

void validate_density(const DensityMatrix& rho, double herm_tol, double trace_tol,
                      double eig_tol) {
  require_square(rho, "validate_density");
  if (!is_hermitian(rho, herm_tol)) {
    throw NumericError("density matrix is not Hermitian");
  }
  const cplx t = trace(rho);
  if (std::abs(t - 1.0) > trace_tol) {
    throw NumericError("density matrix trace deviates from 1 by " +
                       std::to_string(std::abs(t - 1.0)));
  }
  const double min_eig = min_eigenvalue_hermitian(rho);
  if (min_eig < -eig_tol) {
    throw NumericError("density matrix has negative eigenvalue " +
                       std::to_string(min_eig));
  }
}

double min_eigenvalue_hermitian(const CMatrix& m) {
  require_square(m, "min_eigenvalue_hermitian");
  const int n = m.rows;
  std::vector<cplx> work(m.a);
  std::vector<double> eigs(n);
  const int info = LAPACKE_zheev(
      LAPACK_ROW_MAJOR, 'N', 'U', n,
      reinterpret_cast<lapack_complex_double*>(work.data()), n, eigs.data());
  if (info != 0) {
    throw NumericError("zheev failed with info=" + std::to_string(info));
  }
  return eigs[0];  // ascending order
}

StateVector random_unit_state(int dim, uint64_t seed, uint64_t index) {
  if (dim < 1) throw ConfigError("random_unit_state: dim must be >= 1");
  RngStream rng{seed ^ 0x72616e647374ULL, index};
  StateVector psi(dim);
  for (int i = 0; i < dim; ++i) {
    psi[i] = cplx(rng.gaussian(i, 0), rng.gaussian(i, 1));
  }
  normalize(psi);
  return psi;
}

CMatrix random_hermitian(int dim, uint64_t seed, uint64_t index) {
  if (dim < 1) throw ConfigError("random_hermitian: dim must be >= 1");
  RngStream rng{seed ^ 0x72616e64686dULL, index};
  CMatrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      g(i, j) = cplx(rng.gaussian(i * dim + j, 0), rng.gaussian(i * dim + j, 1));
  CMatrix h(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      h(i, j) = 0.5 * (g(i, j) + std::conj(g(j, i)));
  return h;
}

}  // namespace unravel
