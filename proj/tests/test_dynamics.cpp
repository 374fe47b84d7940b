#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "zeno/dynamics.hpp"

namespace {

using namespace zeno;

ModelSpec make_model(ModelKind kind, double eps, double delta, double G, double wc, double beta,
                     double J = 0.5) {
  ModelSpec m;
  m.kind = kind;
  m.epsilon = eps;
  m.delta = delta;
  m.J = Spin::from_value(J);
  m.bath = {{G, 1.0, wc}, beta};
  return m;
}

DensityMatrix random_state(int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  ComplexMatrix a(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) a(r, c) = Complex(normal(rng), normal(rng));
  }
  ComplexMatrix m = a * a.adjoint();
  return DensityMatrix(m / m.trace().real());
}

TEST(ModelSpec, DerivedOperatorsAndValidation) {
  auto [sx, sy, sz] = pauli();
  const auto pd = make_model(ModelKind::PopulationDecay, 1.0, 0.0, 0.01, 50.0, 100.0);
  EXPECT_LT(max_abs_diff(pd.hamiltonian(), 0.5 * sz), 1e-15);
  EXPECT_LT(max_abs_diff(pd.coupling(), sx), 1e-15);
  const auto sb = make_model(ModelKind::SpinBoson, 2.0, 2.0, 0.01, 10.0, 50.0);
  EXPECT_LT(max_abs_diff(sb.hamiltonian(), sz + sx), 1e-15);
  EXPECT_LT(max_abs_diff(sb.coupling(), sz), 1e-15);
  const auto ls = make_model(ModelKind::LargeSpin, 2.0, 2.0, 0.01, 50.0, 1.0, 1.0);
  auto [jx, jy, jz] = angular_momentum(1.0);
  EXPECT_LT(max_abs_diff(ls.hamiltonian(), 2.0 * jz + 2.0 * jx), 1e-15);
  EXPECT_LT(max_abs_diff(ls.coupling(), 2.0 * jz), 1e-15);

  auto bad = pd;
  bad.J = Spin::from_value(1.0);
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  auto tunnelling = make_model(ModelKind::LargeSpinDephasing, 1.0, 0.0, 0.01, 50.0, 1.0, 1.0);
  tunnelling.delta = 1.0;
  EXPECT_THROW(tunnelling.validate(), std::invalid_argument);
  EXPECT_EQ(model_kind_from_string("spin_boson"), ModelKind::SpinBoson);
  EXPECT_FALSE(model_kind_from_string("nope").has_value());
}

TEST(ExactDephasing, QubitMap) {
  const auto rho0 = density_from_bloch({1.0, 0.0, 0.0});
  const auto n = bloch_from_density(dephasing_propagate_qubit(rho0, 0.3));
  EXPECT_NEAR(n.x, std::exp(-0.3), 1e-15);
  EXPECT_NEAR(n.y, 0.0, 1e-15);
  const BathParams bath{{0.1, 1.0, 10.0}, 0.5};
  EXPECT_LT(max_abs_diff(dephasing_propagate_qubit(rho0, 0.0, bath).matrix(), rho0.matrix()), 1e-15);
  const auto tilted = density_from_bloch({0.3, 0.4, 0.5});
  for (double t : {0.2, 1.0, 4.0}) {
    EXPECT_NEAR(bloch_from_density(dephasing_propagate_qubit(tilted, t, bath)).z, 0.5, 1e-15);
  }
}

TEST(ExactDephasing, LargeSpinReducesToQubitAndKeepsDiagonal) {
  std::mt19937_64 rng(3);
  const auto q = random_state(2, rng);
  EXPECT_LT(max_abs_diff(dephasing_propagate_large_spin(q, Spin::half(), 0.7, -1.3).matrix(),
                         dephasing_propagate_qubit(q, 0.7).matrix()),
            1e-15);
  const BathParams bath{{0.01, 1.0, 50.0}, 1.0};
  const auto r = random_state(3, rng);
  EXPECT_LT(max_abs_diff(dephasing_propagate_large_spin(r, 0.0, bath, Spin::from_value(1.0)).matrix(),
                         r.matrix()),
            1e-15);
  for (double t : {0.3, 2.0}) {
    const auto out = dephasing_propagate_large_spin(r, t, bath, Spin::from_value(1.0));
    EXPECT_LT(hermiticity_residual(out.matrix()), 1e-12);
    EXPECT_LT(std::abs(out.matrix().trace() - 1.0), 1e-12);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(out(i, i), r(i, i));
  }
  EXPECT_THROW(dephasing_propagate_large_spin(q, Spin::from_value(1.0), 0.1, 0.1), std::invalid_argument);
}

TEST(CumulativeIntegral, FourthOrderOnPolynomials) {
  const double h = 0.1;
  std::vector<Complex> g;
  for (int k = 0; k <= 20; ++k) {
    const double t = k * h;
    g.emplace_back(t * t * t - 2 * t, std::cos(0.0) * t * t);
  }
  const auto cum = cumulative_integral(g, h);
  for (int k = 0; k <= 20; ++k) {
    const double t = k * h;
    EXPECT_NEAR(cum[k].real(), t * t * t * t / 4 - t * t, 1e-12) << k;
    EXPECT_NEAR(cum[k].imag(), t * t * t / 3, 1e-12) << k;
  }
}

TEST(RedfieldKernel, TrivialLimits) {
  const auto model = make_model(ModelKind::SpinBoson, 2.0, 2.0, 0.01, 10.0, 50.0);
  const auto table = tabulate_correlation(model.bath, 1.0, 0.005);
  EXPECT_LT(redfield_kernel(model, table, 0.0).cwiseAbs().maxCoeff(), 1e-15);
  auto free = model;
  free.bath.spectral.G = 0.0;
  const auto zero_table = tabulate_correlation(free.bath, 1.0, 0.005);
  EXPECT_LT(redfield_kernel(free, zero_table, 0.73).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(redfield_kernel(model, table, 1.5), std::out_of_range);
}

TEST(RedfieldKernel, CommutingCaseIsScalarIntegral) {
  // [H, F] = 0: K(t) = F * int_0^t C(u) du. Reference: composite 3-point
  // Gauss-Legendre on the correlation function itself. The table rule is
  // fourth order, so halving the spacing cuts the error about 16-fold.
  const auto model = make_model(ModelKind::PureDephasingQubit, 1.0, 0.0, 0.1, 10.0, 0.5);
  auto reference = [&](double t) {
    Complex ref(0.0);
    const int panels = 800;
    const double nodes[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    const double weights[] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    for (int p = 0; p < panels; ++p) {
      const double a = t * p / panels, b = t * (p + 1) / panels;
      for (int q = 0; q < 3; ++q) {
        ref += 0.5 * (b - a) * weights[q] *
               correlation_series(model.bath, 0.5 * (a + b) + 0.5 * (b - a) * nodes[q]);
      }
    }
    return ref;
  };
  auto kernel_error = [&](double h, double t) {
    const RedfieldKernel kernel(model, tabulate_correlation(model.bath, 2.0, h));
    return max_abs_diff(kernel.at(t), reference(t) * model.coupling());
  };
  for (double t : {0.5, 1.2345, 2.0}) {
    const double scale = std::abs(reference(t));
    const double coarse = kernel_error(0.005, t);
    const double fine = kernel_error(0.0025, t);
    EXPECT_LT(coarse, 1e-5 * scale) << t;
    EXPECT_GT(coarse / fine, 10.0) << t;
  }
}

TEST(Redfield, ClosedSystemIsUnitary) {
  auto model = make_model(ModelKind::SpinBoson, 2.0, 1.0, 0.0, 10.0, 50.0);
  const auto rho0 = density_from_bloch({0.0, 0.0, 1.0});
  const auto traj = redfield_integrate(model, rho0, 3.0, 0.01);
  for (std::size_t k = 0; k < traj.times.size(); k += 37) {
    const auto exact = evolve_unitary(rho0, model.hamiltonian(), traj.times[k]);
    EXPECT_LT(max_abs_diff(traj.states[k].matrix(), exact.matrix()), 1e-8);
  }
}

TEST(Redfield, StepSizeRule) {
  const auto model = make_model(ModelKind::PopulationDecay, 1.0, 0.0, 0.01, 50.0, 100.0);
  const auto rho0 = density_from_bloch({0.0, 0.0, 1.0});
  EXPECT_THROW(redfield_integrate(model, rho0, 1.0, 0.02), std::invalid_argument);
  EXPECT_THROW(redfield_integrate(model, rho0, 1.0, 0.0), std::invalid_argument);
  EXPECT_NO_THROW(redfield_integrate(model, rho0, 0.1, 0.002));
}

TEST(Redfield, PureDephasingMatchesExactAtWeakCoupling) {
  const auto model = make_model(ModelKind::PureDephasingQubit, 1.0, 0.0, 0.01, 10.0, 0.5);
  const auto rho0 = density_from_bloch({1.0, 0.0, 0.0});
  const auto traj = redfield_integrate(model, rho0, 5.0, 0.01);
  for (double t : {0.5, 1.0, 2.5, 5.0}) {
    const auto r = frame_removed_state(model, traj, t);
    const double exact = std::exp(-gamma(model.bath, t)) * 0.5;
    EXPECT_LT(std::abs(std::abs(r(0, 1)) - exact) / exact, 0.02) << t;
    EXPECT_NEAR(r(0, 0).real(), 0.5, 1e-12);
  }
}

TEST(Redfield, PopulationDecayFromExcitedStateStaysDiagonal) {
  const auto model = make_model(ModelKind::PopulationDecay, 1.0, 0.0, 0.01, 50.0, 100.0);
  const auto rho0 = density_from_bloch({0.0, 0.0, 1.0});
  const auto traj = redfield_integrate(model, rho0, 12.0, 0.002);
  double prev = 1.0;
  for (double tau = 0.5; tau <= 12.0; tau += 0.5) {
    const auto r = frame_removed_state(model, traj, tau);
    EXPECT_LT(std::abs(r(0, 1)), 1e-12);
    const double nz = bloch_from_density(r).z;
    EXPECT_LT(nz, prev);
    prev = nz;
  }
  EXPECT_LT(prev, 0.0);
  EXPECT_LT(traj.max_trace_drift, 1e-8);
  EXPECT_GT(traj.min_eigenvalue, -1e-6);
  EXPECT_LT(max_abs_diff(frame_removed_state(model, traj, 0.0).matrix(), rho0.matrix()), 1e-15);
  EXPECT_THROW(frame_removed_state(model, traj, 13.0), std::out_of_range);
}

TEST(Redfield, TrajectoryInvariants) {
  const auto model = make_model(ModelKind::LargeSpin, 2.0, 2.0, 0.01, 50.0, 1.0, 1.0);
  const auto rho0 = DensityMatrix::pure(coherent_state({Spin::from_value(1.0), std::numbers::pi / 2, 0.0}));
  const auto traj = redfield_integrate(model, rho0, 2.0, 0.002);
  EXPECT_EQ(traj.times.front(), 0.0);
  EXPECT_LT(max_abs_diff(traj.states.front().matrix(), rho0.matrix()), 1e-15);
  for (std::size_t k = 1; k < traj.times.size(); ++k) ASSERT_GT(traj.times[k], traj.times[k - 1]);
  EXPECT_LT(traj.max_trace_drift, 1e-8);
}

}  // namespace
