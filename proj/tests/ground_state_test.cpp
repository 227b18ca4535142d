#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <eigenshift/ground_state.hpp>

using namespace eigenshift;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
constexpr double kAiryZero = 2.338107410459767;  // -a_1, first zero of Ai

}  // namespace

TEST(Discretize, FreeParticleTwoNodes) {
  const auto T = discretize(PotentialSpec::affine(0, 0), Domain::finite(0, 1), 2);
  ASSERT_EQ(T.size(), 2u);
  EXPECT_NEAR(T.diag[0], 18.0, 1e-12);
  EXPECT_NEAR(T.diag[1], 18.0, 1e-12);
  EXPECT_NEAR(T.off[0], -9.0, 1e-12);
}

TEST(Discretize, ConstantShift) {
  const auto T = discretize(PotentialSpec::affine(7, 0), Domain::finite(-1, 2), 9);
  const double h = 3.0 / 10.0;
  for (double d : T.diag) EXPECT_NEAR(d, 2.0 / (h * h) + 7.0, 1e-12);
}

TEST(Discretize, DiscreteEigenvalueFormula) {
  const std::size_t n = 99;
  const double h = 1.0 / (n + 1);
  const auto T = discretize(PotentialSpec::affine(0, 0), Domain::finite(0, 1), n);
  const Bracket b = lowest_eigenvalue_bracket(T, 1e-14, 400);
  const double s = std::sin(std::numbers::pi * h / 2);
  EXPECT_NEAR(b.hi, 4.0 / (h * h) * s * s, 1e-9);
}

TEST(Domain, RejectsInvalid) {
  EXPECT_THROW(Domain::finite(1, 1), DomainError);
  EXPECT_THROW(Domain::finite(2, 1), DomainError);
  EXPECT_THROW(Domain::half_line(0, 1), DomainError);
  EXPECT_THROW(solve_ground_state(PotentialSpec::affine(0, 0), Domain::finite(0, 1), 15), DomainError);
}

TEST(GroundState, FreeParticle) {
  const auto spec = PotentialSpec::affine(0, 0);
  const GroundState gs = solve_ground_state(spec, Domain::finite(0, 1), 4001);
  EXPECT_NEAR(gs.lambda, kPi2, 1e-5 * kPi2);
  EXPECT_NEAR(gs.quad_norm, 1.0, 1e-12);
  EXPECT_NEAR(gs.flux_t, -std::sqrt(2.0) * std::numbers::pi, 1e-5 * std::sqrt(2.0) * std::numbers::pi);
  EXPECT_NEAR(gs.flux_a, std::sqrt(2.0) * std::numbers::pi, 1e-5 * std::sqrt(2.0) * std::numbers::pi);
  for (std::size_t i = 0; i < gs.u.size(); i += 97) {
    EXPECT_NEAR(gs.u[i], std::sqrt(2.0) * std::sin(std::numbers::pi * gs.grid.x(i)), 1e-5);
  }
  EXPECT_NEAR(extrapolated_lambda(spec, Domain::finite(0, 1), 4001), kPi2, 1e-8 * kPi2);
}

TEST(GroundState, SecondOrderConvergence) {
  const auto spec = PotentialSpec::affine(0, 0);
  const double e1 = solve_ground_state(spec, Domain::finite(0, 1), 99).lambda - kPi2;
  const double e2 = solve_ground_state(spec, Domain::finite(0, 1), 199).lambda - kPi2;
  EXPECT_NEAR(e1 / e2, 4.0, 0.01);
}

TEST(GroundState, PositiveNormalizedResidualSmall) {
  const PotentialSpec specs[] = {PotentialSpec::quadratic(1, -2, 3), PotentialSpec::abs_shift(0.4, 5.0),
                                 PotentialSpec::exp_growth(2, 1.5), PotentialSpec::neg_abs(0.2, 3.0)};
  for (const auto& spec : specs) {
    const GroundState gs = solve_ground_state(spec, Domain::finite(-1, 1.5), 1001);
    EXPECT_EQ(gs.u.front(), 0.0);
    EXPECT_EQ(gs.u.back(), 0.0);
    for (std::size_t i = 1; i + 1 < gs.u.size(); ++i) ASSERT_GT(gs.u[i], 0.0);
    EXPECT_NEAR(gs.quad_norm, 1.0, 1e-12);
    EXPECT_LE(gs.residual, 1e-8 * (1 + std::abs(gs.lambda)));
    EXPECT_NEAR(rayleigh_energy(gs, spec), gs.lambda, 1e-10 * (1 + std::abs(gs.lambda))) << spec.label();
    const auto T = discretize(spec, gs.domain, 1001);
    EXPECT_EQ(sturm_count(T, gs.lambda - 1e-8 * (1 + std::abs(gs.lambda))), 0u);
    EXPECT_EQ(sturm_count(T, gs.lambda + 1e-8 * (1 + std::abs(gs.lambda))), 1u);
  }
}

TEST(GroundState, ShiftCovariance) {
  const auto base = solve_ground_state(PotentialSpec::quadratic(0, 1, 2), Domain::finite(-1, 1), 801);
  const auto shifted = solve_ground_state(PotentialSpec::quadratic(3.5, 1, 2), Domain::finite(-1, 1), 801);
  EXPECT_NEAR(shifted.lambda - base.lambda, 3.5, 1e-10);
  for (std::size_t i = 0; i < base.u.size(); ++i) EXPECT_NEAR(shifted.u[i], base.u[i], 1e-9);
}

TEST(GroundState, SymmetricPotentialGivesSymmetricState) {
  const auto gs = solve_ground_state(PotentialSpec::quadratic(0, 0, 4), Domain::finite(-1, 1), 1001);
  for (std::size_t i = 0; i < gs.u.size(); ++i) EXPECT_NEAR(gs.u[i], gs.u[gs.u.size() - 1 - i], 1e-10);
}

TEST(GroundState, EnergyEqualsRayleighQuotient) {
  const auto spec = PotentialSpec::affine(0, 0);
  const auto gs = solve_ground_state(spec, Domain::finite(0, 1), 2001);
  EXPECT_NEAR(rayleigh_energy(gs, spec), kPi2, 1e-5);
  const auto shifted_spec = PotentialSpec::affine(2.5, 0);
  const auto shifted = solve_ground_state(shifted_spec, Domain::finite(0, 1), 2001);
  EXPECT_NEAR(rayleigh_energy(shifted, shifted_spec) - rayleigh_energy(gs, spec), 2.5, 1e-10);
}

TEST(GroundState, AiryHalfLine) {
  const auto spec = PotentialSpec::affine(0, -1);
  const GroundState gs = solve_ground_state(spec, kNegInf, 2.0, 4001);
  EXPECT_TRUE(gs.domain.left_infinite());
  EXPECT_NEAR(gs.lambda, -2.0 + kAiryZero, 1e-3);
  EXPECT_NEAR(rayleigh_energy(gs, spec), -2.0 + kAiryZero, 1e-3);
  EXPECT_NEAR(extrapolated_lambda(spec, gs.domain, 4001), -2.0 + kAiryZero, 1e-7);
}

TEST(GroundState, HalfHarmonicOscillator) {
  const auto spec = PotentialSpec::quadratic(0, 0, 1);
  const GroundState gs = solve_ground_state(spec, kNegInf, 0.0, 4001);
  EXPECT_NEAR(gs.lambda, 3.0, 1e-6 * 3.0);
  EXPECT_NEAR(extrapolated_lambda(spec, gs.domain, 4001), 3.0, 1e-8);
}

TEST(GroundState, NonConfiningHalfLineRejected) {
  EXPECT_THROW(solve_ground_state(PotentialSpec::affine(0, 1), kNegInf, 0.0, 101), ConfinementError);
  EXPECT_THROW(solve_ground_state(PotentialSpec::neg_quadratic(1.0), kNegInf, 0.0, 101), ConfinementError);
}

TEST(GroundState, WarmStartMatchesCold) {
  const auto spec = PotentialSpec::exp_growth(1, 1);
  const auto prev = solve_ground_state(spec, Domain::finite(0, 1.0), 2001);
  const WarmStart warm{prev.lambda, prev.grid, prev.u};
  const auto cold = solve_ground_state(spec, Domain::finite(0, 1.05), 2001);
  const auto hot = solve_ground_state(spec, Domain::finite(0, 1.05), 2001, {}, &warm);
  EXPECT_NEAR(hot.lambda, cold.lambda, 1e-11 * cold.lambda);
}

TEST(Truncation, QuadraticWall) {
  const double a_eff = truncate_domain(PotentialSpec::quadratic(0, 0, 1), 0.0, 3.0);
  EXPECT_LE(a_eff, -std::sqrt(28.0));
}

TEST(Truncation, AffineWall) {
  const double a_eff = truncate_domain(PotentialSpec::affine(0, -1), 0.0, 2.34);
  EXPECT_LE(a_eff, -27.34);
}

TEST(Truncation, DoublingCheck) {
  const auto spec = PotentialSpec::quadratic(0, 0, 1);
  const Domain d = resolve_domain(spec, kNegInf, 0.0, 2001);
  const double width = d.width();
  const double lam = solve_ground_state(spec, d, 2001).lambda;
  const double lam2 = solve_ground_state(spec, Domain::half_line(0.0, -2.0 * width), 4003).lambda;
  EXPECT_LT(std::abs(lam - lam2), 1e-9);
}

TEST(Truncation, NonConfiningRejected) {
  EXPECT_THROW(truncate_domain(PotentialSpec::affine(0, 1), 0.0, 1.0), ConfinementError);
}
