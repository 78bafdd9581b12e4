#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "test_util.hpp"
#include "unravel/core.hpp"
#include "unravel/diffusion.hpp"
#include "unravel/jump.hpp"
#include "unravel/models.hpp"
#include "unravel/oracle.hpp"
#include "unravel/sim.hpp"
#include "unravel/stats.hpp"

using namespace unravel;
using unravel::tst::decay_k1;

namespace {

std::vector<double> exact_series(const LindbladModel& m, const StateVector& psi0,
                                 const CMatrix& obs, const TimeGrid& grid) {
  const auto states = propagate_exact(m, outer(psi0, psi0), grid);
  return trace_series(states, obs);
}

}  // namespace

TEST_CASE("estimate_series basics") {
  const LindbladModel m = decay_model(DecayParams{});
  const TimeGrid grid = make_grid(0.0, 1e-3, 20);
  const std::vector<Observable> obs{make_observable("id", CMatrix::identity(2)),
                                    make_observable("sz", pauli_z())};
  const auto moments = accumulate_ensemble(make_rqsd(m), plus_state(), grid, obs, 50, 3);

  SUBCASE("the identity has mean one and zero variance") {
    const EstimateSeries s = estimate_series(moments, 0);
    REQUIRE(s.mean.size() == static_cast<size_t>(grid.points()));
    for (int i = 0; i < grid.points(); ++i) {
      CHECK(s.mean[i] == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(s.variance[i] <= 1e-20);
      CHECK(s.second_moment[i] == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(s.exact.empty());
  }

  SUBCASE("moments and trajectory overloads agree") {
    const EstimateSeries from_moments = estimate_series(moments, 1);
    const auto trajectories = run_ensemble(make_rqsd(m), plus_state(), grid, 50, 3);
    const EstimateSeries from_paths = estimate_series(trajectories, obs[1]);
    REQUIRE(from_paths.n_samples == 50);
    for (int i = 0; i < grid.points(); ++i) {
      CHECK(std::abs(from_moments.mean[i] - from_paths.mean[i]) <= 1e-12);
      CHECK(std::abs(from_moments.variance[i] - from_paths.variance[i]) <= 1e-12);
    }
  }

  SUBCASE("exact series must match the grid") {
    CHECK_THROWS_AS(estimate_series(moments, 1, std::vector<double>(5, 0.0)),
                    ConfigError);
    CHECK_THROWS_AS(estimate_series(moments, 2), ConfigError);
    CHECK_THROWS_AS(estimate_series(std::vector<Trajectory>{}, obs[1]), ConfigError);
  }
}

TEST_CASE("metrics reduce a series to hand-checkable numbers") {
  EstimateSeries s;
  s.grid = make_grid(0.0, 1.0, 1);
  s.n_samples = 3;
  s.mean = {1.0, 2.0};
  s.variance = {2.0, 4.0};
  s.second_moment = {3.0, 8.0};
  s.exact = {0.0, 0.0};

  const Metrics m = metrics(s);
  CHECK(m.trajectory_error == doctest::Approx(1.5).epsilon(1e-15));
  // population variances 2 and 4 become sample variances 3 and 6, divided by
  // n = 3 and averaged: (1 + 2) / 2
  CHECK(m.averaged_var == doctest::Approx(1.5).epsilon(1e-15));

  SUBCASE("validation") {
    EstimateSeries empty;
    CHECK_THROWS_AS(metrics(empty), ConfigError);
    EstimateSeries no_exact = s;
    no_exact.exact.clear();
    CHECK_THROWS_AS(metrics(no_exact), ConfigError);
    EstimateSeries single = s;
    single.n_samples = 1;
    CHECK_THROWS_AS(metrics(single), ConfigError);
  }
}

TEST_CASE("averaged variance shrinks like one over the sample count") {
  const LindbladModel m = decay_model(DecayParams{});
  const TimeGrid grid = make_grid(0.0, 1e-3, 100);
  const std::vector<Observable> obs{make_observable("sz", pauli_z())};
  const std::vector<double> exact = exact_series(m, plus_state(), pauli_z(), grid);

  const auto small = accumulate_ensemble(make_rqsd(m), plus_state(), grid, obs, 500, 7);
  const auto large =
      accumulate_ensemble(make_rqsd(m), plus_state(), grid, obs, 2000, 7);
  const Metrics ms = metrics(estimate_series(small, 0, exact));
  const Metrics ml = metrics(estimate_series(large, 0, exact));

  const double ratio = ms.averaged_var / ml.averaged_var;
  CHECK(ratio > 2.8);
  CHECK(ratio < 5.7);
  CHECK(ms.trajectory_error < 0.1);
}

TEST_CASE("empirical_dv on frozen dynamics is exactly zero") {
  const LindbladModel m = make_model(CMatrix::zero(2, 2), {});
  const StateVector psi = plus_state();

  const DvEstimate diff = empirical_dv(make_lqsd(m), pauli_z(), psi, 1e-3, 100, 5);
  CHECK(diff.value == 0.0);
  CHECK(diff.std_error == 0.0);

  const DvEstimate jump = empirical_dv(make_qjp(m), pauli_z(), psi, 1e-3, 100, 5);
  CHECK(jump.value == 0.0);
  CHECK(jump.std_error == 0.0);
}

TEST_CASE("empirical_dv matches the analytic integrand") {
  const LindbladModel m = decay_k1();
  const StateVector psi = plus_state();
  const CMatrix obs = pauli_z();
  const double h = 5e-4;
  const int n = 30000;

  SUBCASE("diffusion") {
    const DiffusionScheme s = make_rqsd(m);
    const double expected = dv_diffusion_integrand(m, obs, s, psi);
    const DvEstimate est = empirical_dv(s, obs, psi, h, n, 11);
    CHECK(std::abs(est.value - expected) <=
          4.0 * est.std_error + 0.03 * (1.0 + std::abs(expected)));
  }

  SUBCASE("jump") {
    const CMatrix op = m.lindblad_ops[0];
    JumpChannelParams ch;
    ch.alpha = [op](const StateVector& v) { return std::norm(vdot(v, matvec(op, v))); };
    ch.beta = [op](const StateVector& v) { return std::arg(vdot(v, matvec(op, v))); };
    JumpParams params;
    params.channels.push_back(ch);
    const JumpScheme s = make_qjp(m);
    const double expected = dv_jump_integrand(m, obs, params, psi);
    const DvEstimate est = empirical_dv(s, obs, psi, h, n, 13);
    CHECK(std::abs(est.value - expected) <=
          4.0 * est.std_error + 0.03 * (1.0 + std::abs(expected)));
  }

  SUBCASE("repeatable for a fixed seed") {
    const DiffusionScheme s = make_rqsd(m);
    const DvEstimate a = empirical_dv(s, obs, psi, h, 200, 17);
    const DvEstimate b = empirical_dv(s, obs, psi, h, 200, 17);
    CHECK(a.value == b.value);
    CHECK(a.std_error == b.std_error);
  }
}

TEST_CASE("empirical_dv validation") {
  const LindbladModel m = decay_k1();
  const DiffusionScheme s = make_rqsd(m);
  const StateVector psi = plus_state();
  CHECK_THROWS_AS(empirical_dv(s, pauli_z(), psi, 0.0, 100, 1), ConfigError);
  CHECK_THROWS_AS(empirical_dv(s, pauli_z(), psi, -1e-3, 100, 1), ConfigError);
  CHECK_THROWS_AS(empirical_dv(s, pauli_z(), psi, 1e-3, 1, 1), ConfigError);
  CHECK_THROWS_AS(empirical_dv(s, sigma_plus(), psi, 1e-3, 100, 1), ConfigError);
  CHECK_THROWS_AS(empirical_dv(s, number_op(3), psi, 1e-3, 100, 1), ConfigError);
  const StateVector wrong = basis_state(3, 0);
  CHECK_THROWS_AS(empirical_dv(s, pauli_z(), wrong, 1e-3, 100, 1), ConfigError);
}

TEST_CASE("boxplot_summary uses linear-interpolation quartiles") {
  SUBCASE("one to ten, shuffled") {
    std::vector<double> v{7, 2, 9, 4, 1, 10, 3, 8, 5, 6};
    const BoxplotSummary b = boxplot_summary(v);
    CHECK(b.min == 1.0);
    CHECK(b.q1 == doctest::Approx(3.25).epsilon(1e-15));
    CHECK(b.median == doctest::Approx(5.5).epsilon(1e-15));
    CHECK(b.q3 == doctest::Approx(7.75).epsilon(1e-15));
    CHECK(b.max == 10.0);
  }

  SUBCASE("single value collapses the box") {
    const BoxplotSummary b = boxplot_summary({2.5});
    CHECK(b.min == 2.5);
    CHECK(b.q1 == 2.5);
    CHECK(b.median == 2.5);
    CHECK(b.q3 == 2.5);
    CHECK(b.max == 2.5);
  }

  SUBCASE("two values interpolate") {
    const BoxplotSummary b = boxplot_summary({2.0, 1.0});
    CHECK(b.q1 == doctest::Approx(1.25).epsilon(1e-15));
    CHECK(b.median == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(b.q3 == doctest::Approx(1.75).epsilon(1e-15));
  }

  SUBCASE("empty input") {
    CHECK_THROWS_AS(boxplot_summary({}), ConfigError);
  }
}

TEST_CASE("summarize_runs collects repeat statistics") {
  const RunSummary r = summarize_runs("rqsd", "sz", {3.0, 1.0, 2.0}, {0.4, 0.2, 0.6});
  CHECK(r.scheme_id == "rqsd");
  CHECK(r.observable == "sz");
  CHECK(r.errors == std::vector<double>{3.0, 1.0, 2.0});
  CHECK(r.median_error == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.median_variance == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(r.error_box.median == r.median_error);
  CHECK(r.variance_box.min == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(r.variance_box.max == doctest::Approx(0.6).epsilon(1e-15));

  CHECK_THROWS_AS(summarize_runs("x", "y", {1.0}, {1.0, 2.0}), ConfigError);
}
