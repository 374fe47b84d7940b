#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "zeno/measurement.hpp"

namespace {

using namespace zeno;
using std::numbers::pi;

BlochVector random_ball(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uni;
  BlochVector n{normal(rng), normal(rng), normal(rng)};
  return n.scaled(std::cbrt(uni(rng)) / n.norm());
}

BlochVector random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  BlochVector n{normal(rng), normal(rng), normal(rng)};
  return n.normalized();
}

ComplexVector qubit_state(const BlochVector& n) { return InitialState::from_bloch(n).state_vector(Spin::half()); }

TEST(Survival, TrivialCases) {
  const ComplexVector chi = coherent_state({Spin::from_value(1.0), 0.4, 1.1});
  EXPECT_NEAR(survival(DensityMatrix::pure(chi), chi), 1.0, 1e-12);
  EXPECT_NEAR(survival(DensityMatrix::maximally_mixed(3), chi), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(survival(DensityMatrix::maximally_mixed(2), chi), std::invalid_argument);
  EXPECT_THROW(survival(DensityMatrix::maximally_mixed(3), 2.0 * chi), std::invalid_argument);
}

TEST(Survival, QubitDotProductFormula) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const auto n = random_ball(rng);
    const auto m = random_unit(rng);
    EXPECT_NEAR(survival(density_from_bloch(n), qubit_state(m)), 0.5 * (1.0 + n.dot(m)), 1e-12);
  }
}

TEST(OptimalQubit, FlippedAndDegenerate) {
  const auto opt = optimal_qubit(density_from_bloch({0.0, 0.0, -0.8}), {0.0, 0.0, 1.0});
  EXPECT_NEAR(opt.projector.z, -1.0, 1e-15);
  EXPECT_NEAR(opt.s_star, 0.9, 1e-15);
  const BlochVector tie{1.0, 0.0, 0.0};
  const auto mixed = optimal_qubit(DensityMatrix::maximally_mixed(2), tie);
  EXPECT_EQ(mixed.projector.x, 1.0);
  EXPECT_EQ(mixed.s_star, 0.5);
}

TEST(OptimalQubitProperty, DominatesEveryProjector) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const auto rho = density_from_bloch(random_ball(rng));
    const auto m = random_unit(rng);
    const double s_star = optimal_qubit(rho, {0.0, 0.0, 1.0}).s_star;
    EXPECT_LE(survival(rho, qubit_state(m)), s_star + 1e-12);
  }
}

TEST(DecayRate, Definition) {
  EXPECT_EQ(decay_rate(1.0, 3.0), 0.0);
  EXPECT_NEAR(decay_rate(std::exp(-2.0), 2.0), 1.0, 1e-15);
  EXPECT_NEAR(decay_rate(0.9, 0.5), 0.21072103131565256, 1e-14);
  EXPECT_TRUE(std::isinf(decay_rate(0.0, 1.0)));
  EXPECT_THROW(decay_rate(0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(decay_rate(1.5, 1.0), std::invalid_argument);
}

TEST(SurvivalAfterN, Powers) {
  EXPECT_EQ(survival_after_n(0.7, 1), 0.7);
  EXPECT_EQ(survival_after_n(1.0, 50), 1.0);
  EXPECT_NEAR(survival_after_n(0.9, 3), 0.729, 1e-15);
  EXPECT_THROW(survival_after_n(0.9, 0), std::invalid_argument);
}

TEST(DephasingSurvival, ClosedForms) {
  const BlochVector eq{std::cos(0.3), std::sin(0.3), 0.0};
  const BlochVector pole{0.0, 0.0, 1.0};
  const double r3 = 1.0 / std::sqrt(3.0);
  const BlochVector diag{r3, r3, r3};
  EXPECT_NEAR(dephasing_survival_unopt(diag, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(dephasing_survival_unopt(eq, 0.4), 0.5 * (1.0 + std::exp(-0.4)), 1e-15);
  for (double g : {0.0, 0.1, 1.0, 5.0}) {
    EXPECT_NEAR(dephasing_survival_unopt(pole, g), 1.0, 1e-15);
    EXPECT_NEAR(dephasing_survival_opt(pole, g), 1.0, 1e-15);
    EXPECT_NEAR(dephasing_survival_opt(eq, g), dephasing_survival_unopt(eq, g), 1e-15);
    EXPECT_GE(dephasing_survival_opt(diag, g), dephasing_survival_unopt(diag, g) - 1e-15);
  }
  EXPECT_NEAR(dephasing_survival_opt(diag, 1.0), 0.5 * (1.0 + std::sqrt(1.0 / 3 + std::exp(-2.0) * 2.0 / 3)),
              1e-15);
  EXPECT_NEAR(dephasing_survival_opt(diag, 1.0), 0.825406, 1e-6);
  EXPECT_THROW(dephasing_survival_opt({0.5, 0.0, 0.0}, 1.0), std::invalid_argument);
}

TEST(DephasingSurvival, AgreesWithPropagatedState) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 50; ++i) {
    const auto n0 = random_unit(rng);
    const double g = 0.1 * i;
    const auto rho = dephasing_propagate_qubit(density_from_bloch(n0), g);
    EXPECT_NEAR(survival(rho, qubit_state(n0)), dephasing_survival_unopt(n0, g), 1e-12);
    EXPECT_NEAR(optimal_qubit(rho, n0).s_star, dephasing_survival_opt(n0, g), 1e-12);
  }
}

TEST(CoherentSurvival, InitialTimeOverlaps) {
  const BathParams bath{{0.01, 1.0, 50.0}, 1.0};
  const Spin J = Spin::from_value(1.5);
  const CoherentStateSpec eta{J, 0.9, 0.4};
  EXPECT_NEAR(coherent_survival(eta, eta, 0.0, bath), 1.0, 1e-12);
  const CoherentStateSpec zeta{J, 2.1, 3.3};
  // |<zeta|eta>|^2 = ((1 + n.n') / 2)^{2J}
  const double c = BlochVector::from_angles(0.9, 0.4).dot(BlochVector::from_angles(2.1, 3.3));
  EXPECT_NEAR(coherent_survival(eta, zeta, 0.0, bath), std::pow(0.5 * (1.0 + c), 3.0), 1e-12);
  EXPECT_THROW(coherent_survival(eta, CoherentStateSpec{Spin::half(), 0.1, 0.0}, 0.0, bath),
               std::invalid_argument);
}

TEST(CoherentSurvival, SpinHalfReducesToQubit) {
  const BathParams bath{{0.1, 1.0, 10.0}, 0.5};
  const CoherentStateSpec eta{Spin::half(), 0.7, 1.9};
  const auto n0 = BlochVector::from_angles(0.7, 1.9);
  for (double t : {0.1, 1.0, 3.0}) {
    EXPECT_NEAR(coherent_survival(eta, eta, t, bath), dephasing_survival_unopt(n0, gamma(bath, t)), 1e-12);
  }
}

TEST(OptimizeCoherent, SpinHalfFindsEvolvedBlochDirection) {
  const BathParams bath{{0.1, 1.0, 10.0}, 0.5};
  const CoherentStateSpec eta{Spin::half(), 0.6, 2.0};
  const auto n0 = BlochVector::from_angles(0.6, 2.0);
  for (double t : {0.3, 1.0, 2.0}) {
    const double g = gamma(bath, t);
    const auto opt = optimize_coherent(eta, t, bath);
    const BlochVector expected = BlochVector{std::exp(-g) * n0.x, std::exp(-g) * n0.y, n0.z}.normalized();
    const auto got = BlochVector::from_angles(opt.theta, opt.phi);
    EXPECT_LT(std::acos(std::min(1.0, got.dot(expected))), 1e-4) << t;
    EXPECT_NEAR(opt.s, dephasing_survival_opt(n0, g), 1e-10);
    EXPECT_GE(opt.s, opt.grid_best);
  }
}

TEST(OptimizeCoherent, ShortTimeKeepsInitialDirection) {
  const BathParams bath{{0.01, 1.0, 50.0}, 1.0};
  const CoherentStateSpec eta{Spin::from_value(1.0), pi / 2, 0.0};
  const auto opt = optimize_coherent(eta, 1e-4, bath);
  EXPECT_NEAR(opt.theta, pi / 2, 1e-3);
  EXPECT_LT(std::min(opt.phi, 2 * pi - opt.phi), 1e-3);
  EXPECT_GE(opt.s, coherent_survival(eta, eta, 1e-4, bath));
}

TEST(FlipTime, NotFoundWithoutCoupling) {
  ModelSpec m;
  m.kind = ModelKind::PopulationDecay;
  m.epsilon = 1.0;
  m.bath = {{0.0, 1.0, 50.0}, 100.0};
  const auto traj = redfield_integrate(m, density_from_bloch({0.0, 0.0, 1.0}), 5.0, 0.002);
  const auto flip = flip_time(m, traj);
  EXPECT_FALSE(flip.found);
  EXPECT_NEAR(flip.final_nz, 1.0, 1e-12);
}

TEST(FlipTime, StrongerCouplingFlipsSooner) {
  ModelSpec m;
  m.kind = ModelKind::PopulationDecay;
  m.epsilon = 1.0;
  m.bath = {{0.02, 1.0, 50.0}, 100.0};
  const auto traj = redfield_integrate(m, density_from_bloch({0.0, 0.0, 1.0}), 12.0, 0.002);
  const auto flip = flip_time(m, traj);
  ASSERT_TRUE(flip.found);
  // Weak-coupling rate is linear in G: roughly half of the G = 0.01 value (~10.6).
  EXPECT_GT(flip.time, 4.0);
  EXPECT_LT(flip.time, 6.5);
}

TEST(Sweep, EquatorialDephasingHasNoAdvantage) {
  ModelSpec m;
  m.kind = ModelKind::PureDephasingQubit;
  m.bath = {{0.1, 1.0, 10.0}, 0.5};
  const auto taus = linear_grid(0.05, 5.0, 40);
  const auto sw = sweep(m, InitialState::from_bloch({1.0, 0.0, 0.0}), taus, ProjectorChoice::default_for(m));
  ASSERT_EQ(sw.outcomes.size(), taus.size());
  EXPECT_GT(sw.outcomes.front().s_unopt, 0.95);
  for (const auto& o : sw.outcomes) {
    EXPECT_LT(std::abs(o.gamma_opt - o.gamma_unopt), 1e-10);
    EXPECT_NEAR(std::exp(-o.gamma_opt * o.tau), o.s_opt, 1e-12);
  }
}

TEST(Sweep, ValidatesInputs) {
  ModelSpec m;
  m.kind = ModelKind::PureDephasingQubit;
  m.bath = {{0.1, 1.0, 10.0}, 0.5};
  const auto init = InitialState::from_bloch({1.0, 0.0, 0.0});
  const auto choice = ProjectorChoice::default_for(m);
  EXPECT_THROW(sweep(m, init, {}, choice), std::invalid_argument);
  EXPECT_THROW(sweep(m, init, {0.0, 1.0}, choice), std::invalid_argument);
  EXPECT_THROW(sweep(m, init, {1.0, 0.5}, choice), std::invalid_argument);
  ProjectorChoice coherent;
  coherent.kind = ProjectorKind::OptimalCoherent;
  EXPECT_THROW(sweep(m, init, {0.5, 1.0}, coherent), std::invalid_argument);
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  ModelSpec m;
  m.kind = ModelKind::LargeSpinDephasing;
  m.J = Spin::from_value(1.0);
  m.bath = {{0.01, 1.0, 50.0}, 1.0};
  const auto taus = linear_grid(0.1, 3.0, 12);
  const auto init = InitialState::from_angles(pi / 2, 0.0);
  const auto choice = ProjectorChoice::default_for(m);
  const auto one = sweep(m, init, taus, choice, {0.0, 1});
  const auto four = sweep(m, init, taus, choice, {0.0, 4});
  for (std::size_t i = 0; i < taus.size(); ++i) {
    EXPECT_EQ(one.outcomes[i].s_opt, four.outcomes[i].s_opt);
    EXPECT_EQ(one.outcomes[i].opt_theta, four.outcomes[i].opt_theta);
  }
}

TEST(TransitionCandidates, FindsExtremum) {
  std::vector<double> taus, rates;
  for (int i = 0; i < 50; ++i) {
    taus.push_back(0.1 * (i + 1));
    rates.push_back(-(taus.back() - 2.0) * (taus.back() - 2.0));
  }
  const auto c = transition_candidates(taus, rates);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_NEAR(c[0], 2.0, 0.11);
}

}  // namespace
