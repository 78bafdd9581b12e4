#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace unravel {

using cplx = std::complex<double>;

// pure state amplitudes; dimension is the vector length
using StateVector = std::vector<cplx>;

// invalid user input: config files, malformed matrices, bad parameters
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// runtime numerical failure: diverged trajectory, infeasible scheme
// parameters, solver breakdown
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// dense complex matrix, row-major
struct CMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<cplx> a;

  CMatrix() = default;
  CMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  cplx& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const cplx& operator()(int i, int j) const {
    return a[static_cast<size_t>(i) * cols + j];
  }

  static CMatrix identity(int n);
  static CMatrix zero(int r, int c) { return CMatrix(r, c); }
};

// density operator; same storage, different invariants (Hermitian, unit
// trace, positive semidefinite) enforced by validate_density
using DensityMatrix = CMatrix;

CMatrix operator+(const CMatrix& x, const CMatrix& y);
CMatrix operator-(const CMatrix& x, const CMatrix& y);
CMatrix operator*(const CMatrix& x, const CMatrix& y);
CMatrix operator*(cplx s, const CMatrix& x);
CMatrix adjoint(const CMatrix& m);
CMatrix transpose(const CMatrix& m);
CMatrix conjugate(const CMatrix& m);
CMatrix kron(const CMatrix& x, const CMatrix& y);
cplx trace(const CMatrix& m);
double max_abs(const CMatrix& m);
double frobenius_norm(const CMatrix& m);
double one_norm(const CMatrix& m);  // max absolute column sum
bool is_hermitian(const CMatrix& m, double tol = 1e-12);
void require_hermitian(const CMatrix& m, double tol, const std::string& what);

void matvec(const CMatrix& m, const StateVector& x, StateVector& out);
StateVector matvec(const CMatrix& m, const StateVector& x);

cplx vdot(const StateVector& x, const StateVector& y);  // sum conj(x_i) y_i
double norm2(const StateVector& x);                     // |psi|^2
double vnorm(const StateVector& x);
void normalize(StateVector& x);
void axpy(cplx s, const StateVector& x, StateVector& y);  // y += s x
CMatrix outer(const StateVector& x, const StateVector& y);  // x y^dagger

CMatrix pauli_x();
CMatrix pauli_y();
CMatrix pauli_z();
CMatrix sigma_plus();   // |0><1|
CMatrix sigma_minus();  // |1><0|
CMatrix annihilation(int fock_dim);  // a[m, m+1] = sqrt(m+1)
CMatrix number_op(int fock_dim);     // a^dagger a

struct LindbladModel {
  int dim = 0;
  CMatrix hamiltonian;
  std::vector<CMatrix> lindblad_ops;
};

// validates dimensions and Hermiticity of H
LindbladModel make_model(CMatrix hamiltonian, std::vector<CMatrix> lindblad_ops);

// -i[H, rho] + sum_k (L_k rho L_k^dag - 1/2 {L_k^dag L_k, rho})
DensityMatrix apply_generator(const LindbladModel& model, const DensityMatrix& rho);

// <psi|O|psi>; checks the imaginary part vanishes to rounding
double expectation(const CMatrix& obs, const StateVector& psi);

void validate_density(const DensityMatrix& rho, double herm_tol = 1e-12,
                      double trace_tol = 1e-10, double eig_tol = 1e-10);
double min_eigenvalue_hermitian(const CMatrix& m);

// deterministic pseudo-random test fixtures
StateVector random_unit_state(int dim, uint64_t seed, uint64_t index);
CMatrix random_hermitian(int dim, uint64_t seed, uint64_t index);

}  // namespace unravel
