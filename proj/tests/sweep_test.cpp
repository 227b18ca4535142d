#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <eigenshift/sweep.hpp>

using namespace eigenshift;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;
constexpr double kAiryZero = 2.338107410459767;

}  // namespace

TEST(Sweep, FreeParticleFollowsInverseSquare) {
  const auto sw = sweep(PotentialSpec::affine(0, 0), 0.0, 0.5, 2.0, 16, 2001);
  ASSERT_EQ(sw.ts.size(), 16u);
  EXPECT_DOUBLE_EQ(sw.ts.front(), 0.5);
  EXPECT_DOUBLE_EQ(sw.ts.back(), 2.0);
  for (std::size_t i = 0; i < sw.ts.size(); ++i) {
    const double exact = kPi2 / (sw.ts[i] * sw.ts[i]);
    EXPECT_NEAR(sw.lambdas[i], exact, 1e-6 * exact);
    EXPECT_NEAR(sw.lambda_dots[i], -2 * exact / sw.ts[i], 1e-4 * 2 * exact / sw.ts[i]);
  }
  EXPECT_TRUE(std::isnan(sw.second_diffs.front()));
  EXPECT_TRUE(std::isnan(sw.second_diffs.back()));
  EXPECT_TRUE(sw.verdict.monotone_decreasing);
  EXPECT_TRUE(sw.verdict.convex_in_t);
  EXPECT_TRUE(sw.verdict.expect_convex);
  EXPECT_FALSE(sw.verdict.expect_concave);
  EXPECT_TRUE(sw.verdict.passed());
}

TEST(Sweep, AiryIsAffineInT) {
  const auto sw = sweep(PotentialSpec::affine(0, -1), kNegInf, 0.0, 4.0, 9, 8001);
  for (std::size_t i = 0; i < sw.ts.size(); ++i) EXPECT_NEAR(sw.lambdas[i] + sw.ts[i], kAiryZero, 2e-3);
  for (std::size_t i = 1; i + 1 < sw.ts.size(); ++i) EXPECT_LE(std::abs(sw.second_diffs[i]), 1e-8);
  EXPECT_TRUE(sw.verdict.convex_in_t);
  EXPECT_TRUE(sw.verdict.concave_in_t);
  EXPECT_TRUE(sw.verdict.expect_convex);
  EXPECT_TRUE(sw.verdict.expect_concave);
  EXPECT_TRUE(sw.verdict.passed());
}

TEST(Sweep, HalfOscillatorConvexDecreasingTowardOne) {
  const auto spec = PotentialSpec::quadratic(0, 0, 1);
  const auto sw = sweep(spec, kNegInf, -1.0, 2.0, 31, 4001);
  EXPECT_TRUE(sw.verdict.monotone_decreasing);
  for (std::size_t i = 1; i + 1 < sw.ts.size(); ++i) EXPECT_GT(sw.second_diffs[i], 0.0);
  EXPECT_GT(sw.lambdas.back(), 1.0);
  const double far = solve_ground_state(spec, kNegInf, 6.0, 4001).lambda;
  EXPECT_NEAR(far, 1.0, 1e-4);
  EXPECT_LT(far, sw.lambdas.back());
  EXPECT_TRUE(chord_tangent_consistent(sw, true, 1e-6));
}

TEST(Sweep, ConcaveHalfLineIsConcave) {
  const auto sw = sweep(PotentialSpec::exp_growth(-1, 1, 0, -1), kNegInf, -1.0, 1.0, 11, 8001);
  EXPECT_TRUE(sw.verdict.expect_concave);
  EXPECT_TRUE(sw.verdict.concave_in_t);
  EXPECT_TRUE(sw.verdict.passed());
  EXPECT_TRUE(chord_tangent_consistent(sw, false, 1e-6));
}

TEST(Sweep, ConcaveFiniteIntervalIsNotAsserted) {
  const auto sw = sweep(PotentialSpec::neg_quadratic(1.0), 0.0, 0.5, 2.0, 11, 1001);
  EXPECT_FALSE(sw.verdict.expect_convex);
  EXPECT_FALSE(sw.verdict.expect_concave);
  EXPECT_TRUE(sw.verdict.monotone_decreasing);
}

TEST(Sweep, WarmAndColdAgree) {
  const auto spec = PotentialSpec::abs_shift(0.5, 2.0);
  SweepOptions cold;
  cold.warm_start = false;
  cold.threads = 3;
  const auto a = sweep(spec, -1.0, 0.0, 1.5, 13, 2001);
  const auto b = sweep(spec, -1.0, 0.0, 1.5, 13, 2001, cold);
  for (std::size_t i = 0; i < a.ts.size(); ++i) EXPECT_NEAR(a.lambdas[i], b.lambdas[i], 1e-10 * (1 + a.lambdas[i]));
  EXPECT_EQ(a.verdict.passed(), b.verdict.passed());
}

TEST(Sweep, RejectsBadRanges) {
  const auto spec = PotentialSpec::affine(0, 0);
  EXPECT_THROW(sweep(spec, 0.0, 2.0, 1.0, 5, 101), DomainError);
  EXPECT_THROW(sweep(spec, 0.0, 0.5, 1.0, 4, 101), DomainError);
  EXPECT_THROW(sweep(spec, 1.0, 0.5, 2.0, 5, 101), DomainError);
}

TEST(Sweep, NonConfiningErrorCarriesLocation) {
  try {
    sweep(PotentialSpec::neg_quadratic(1.0), kNegInf, 0.0, 1.0, 5, 101);
    FAIL() << "expected ConfinementError";
  } catch (const ConfinementError& e) {
    EXPECT_NE(std::string(e.what()).find("at t = 0"), std::string::npos);
  }
}

TEST(CheckTheorem, FlagsViolations) {
  SweepResult sw;
  sw.a = 0.0;
  sw.a_eff = 0.0;
  sw.n_interior = 100;
  sw.ts = {1, 2, 3, 4, 5};
  sw.lambdas = {5, 4, 2, 1, 0.5};  // decreasing, but with a concave kink
  sw.lambda_dots = {0, 0, 0, 0, 0};
  sw.second_diffs = {NAN, -1, 1, 0.5, NAN};
  sw.verdict.tol_thm = 1e-3;
  const auto v = check_theorem(sw, Convexity::convex);
  EXPECT_TRUE(v.monotone_decreasing);
  EXPECT_FALSE(v.convex_in_t);
  EXPECT_FALSE(v.passed());
  const auto indeterminate = check_theorem(sw, Convexity::indeterminate);
  EXPECT_TRUE(indeterminate.passed());
  sw.lambdas[3] = 3.0;
  EXPECT_FALSE(check_theorem(sw, Convexity::indeterminate).monotone_decreasing);
}

TEST(BlowUp, FreeParticleIsExact) {
  const auto profile = blowup_profile(PotentialSpec::affine(0, 0), 0.0, {1e-1, 1e-2, 1e-3}, 4001);
  for (double p : profile) EXPECT_NEAR(p, kPi2, 1e-5 * kPi2);
}

TEST(BlowUp, QuadraticApproachesPiSquared) {
  const auto profile = blowup_profile(PotentialSpec::quadratic(0, 0, 1), 0.0, {1e-1, 3e-2, 1e-2}, 4001);
  EXPECT_NEAR(profile.back(), kPi2, 1e-3 * kPi2);
  const double eps[] = {1e-1, 3e-2, 1e-2};
  std::vector<double> raw;
  for (std::size_t i = 0; i < 3; ++i) raw.push_back(profile[i] / (eps[i] * eps[i]));
  EXPECT_LT(raw[0], raw[1]);
  EXPECT_LT(raw[1], raw[2]);
}

TEST(BlowUp, RejectsNonDecreasingOffsets) {
  EXPECT_THROW(blowup_profile(PotentialSpec::affine(0, 0), 0.0, {1e-2, 1e-1}, 101), DomainError);
  EXPECT_THROW(blowup_profile(PotentialSpec::affine(0, 0), kNegInf, {1e-2}, 101), DomainError);
}
