#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "test_util.hpp"
#include "unravel/core.hpp"
#include "unravel/models.hpp"
#include "unravel/oracle.hpp"

using namespace unravel;

namespace {

DensityMatrix plus_density() { return outer(plus_state(), plus_state()); }

}  // namespace

TEST_CASE("vec / unvec round trip and the AXB identity") {
  const CMatrix rho = random_hermitian(3, 2, 0);
  CHECK(max_abs(unvec_density(vec_density(rho), 3) - rho) == 0.0);

  // vec(A X B) = (B^T (x) A) vec(X) under column stacking
  const CMatrix a = random_hermitian(3, 2, 1);
  const CMatrix b = random_hermitian(3, 2, 2);
  const CMatrix x = random_hermitian(3, 2, 3);
  const StateVector lhs = vec_density(a * x * b);
  const StateVector rhs = matvec(kron(transpose(b), a), vec_density(x));
  CHECK(tst::max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("liouvillian of the zero model is the zero matrix") {
  const LindbladModel m = make_model(CMatrix::zero(2, 2), {CMatrix::zero(2, 2)});
  CHECK(max_abs(liouvillian_matrix(m)) == 0.0);
}

TEST_CASE("liouvillian matrix matches the generator") {
  const LindbladModel models[] = {
      decay_model(DecayParams{}),
      cavity_model(CavityParams{0.5, 0.5, 0.2, 0.2, 0.2, 3})};
  for (const auto& m : models) {
    const CMatrix liou = liouvillian_matrix(m);

    for (uint64_t i = 0; i < 20; ++i) {
      const CMatrix rho = random_hermitian(m.dim, 31, i);
      const StateVector lhs = matvec(liou, vec_density(rho));
      const StateVector rhs = vec_density(apply_generator(m, rho));
      CHECK(tst::max_abs_diff(lhs, rhs) <= 1e-10);
    }

    // vec(I) is a left null vector: the adjoint action preserves the trace
    const StateVector vec_eye = vec_density(CMatrix::identity(m.dim));
    const int n2 = m.dim * m.dim;
    double worst = 0.0;
    for (int col = 0; col < n2; ++col) {
      cplx acc = 0.0;
      for (int row = 0; row < n2; ++row) {
        acc += std::conj(vec_eye[static_cast<size_t>(row)]) * liou(row, col);
      }
      worst = std::max(worst, std::abs(acc));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("exact propagation of the two-level decay model") {
  const LindbladModel m = decay_model(DecayParams{});
  const TimeGrid grid = make_grid(0.0, 0.01, 200);
  const auto states = propagate_exact(m, plus_density(), grid);
  REQUIRE(static_cast<int>(states.size()) == grid.points());

  const auto sx = trace_series(states, pauli_x());
  const auto sz = trace_series(states, pauli_z());
  double worst_x = 0.0, worst_z = 0.0;
  for (int i = 0; i < grid.points(); ++i) {
    const double t = grid.time(i);
    worst_x = std::max(worst_x, std::abs(sx[i] - std::exp(-5.0 * t)));
    worst_z = std::max(worst_z, std::abs(sz[i] + 0.5 * (1.0 - std::exp(-10.0 * t))));
  }
  CHECK(worst_x <= 1e-7);
  CHECK(worst_z <= 1e-7);

  for (const auto& rho : states) {
    CHECK(std::abs(trace(rho) - cplx(1.0)) <= 1e-8);
    CHECK(is_hermitian(rho, 1e-12));
    CHECK(min_eigenvalue_hermitian(rho) >= -1e-8);
  }
}

TEST_CASE("zero generator leaves the state alone") {
  const LindbladModel m = make_model(CMatrix::zero(2, 2), {});
  const TimeGrid grid = make_grid(0.0, 0.2, 5);
  const auto states = propagate_exact(m, plus_density(), grid);
  for (const auto& rho : states) {
    CHECK(max_abs(rho - plus_density()) <= 1e-12);
  }
}

TEST_CASE("semigroup property") {
  const LindbladModel m = decay_model(DecayParams{});
  const auto direct = propagate_exact(m, plus_density(), make_grid(0.0, 1.0, 1));
  const auto first = propagate_exact(m, plus_density(), make_grid(0.0, 0.3, 1));
  const auto second = propagate_exact(m, first.back(), make_grid(0.3, 0.7, 1));
  CHECK(max_abs(second.back() - direct.back()) <= 1e-7);
}

TEST_CASE("grid refinement is consistent") {
  const LindbladModel m = decay_model(DecayParams{});
  const auto coarse = propagate_exact(m, plus_density(), make_grid(0.0, 0.1, 10));
  const auto fine = propagate_exact(m, plus_density(), make_grid(0.0, 0.05, 20));
  for (int i = 0; i <= 10; ++i) {
    CHECK(max_abs(coarse[static_cast<size_t>(i)] - fine[static_cast<size_t>(2 * i)]) <=
          1e-8);
  }
}

TEST_CASE("propagate_exact rejects bad input") {
  const LindbladModel m = decay_model(DecayParams{});
  const CMatrix mixed = cplx(1.0 / 3.0, 0.0) * CMatrix::identity(3);
  CHECK_THROWS_AS(propagate_exact(m, mixed, make_grid(0.0, 0.1, 2)), ConfigError);
}

TEST_CASE("trace_series evaluates tr(O rho)") {
  const LindbladModel m = decay_model(DecayParams{});
  const TimeGrid grid = make_grid(0.0, 0.5, 2);
  const auto states = propagate_exact(m, plus_density(), grid);
  const auto ones = trace_series(states, CMatrix::identity(2));
  for (const double v : ones) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
}
