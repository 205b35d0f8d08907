#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "seqstop/special.hpp"

using namespace seqstop::special;

namespace {

// Reference values from tests/oracles/oracle_values.py (50-digit mpmath).
constexpr double kPhi1 = 0.24197072451914334980;
constexpr double kPhiMinus5 = 2.8665157187919391167e-7;
constexpr double kLogPhiMinus10 = -53.231285150512470578;
constexpr double kMillsLowerMinus10 = 10.098093233962511963;
constexpr double kMillsUpper1 = 1.5251352761609812091;

void expect_rel(double got, double want, double tol) {
  EXPECT_LE(std::fabs(got - want), tol * std::fabs(want)) << "got " << got << " want " << want;
}

}  // namespace

TEST(Phi, DensityValues) {
  EXPECT_DOUBLE_EQ(phi(0.0), 0.3989422804014327);
  expect_rel(phi(1.0), kPhi1, 1e-15);
  EXPECT_EQ(phi(-3.0), phi(3.0));
}

TEST(Phi, DensityRejectsNonFinite) {
  EXPECT_THROW(phi(std::numeric_limits<double>::infinity()), std::domain_error);
  EXPECT_THROW(phi(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
  EXPECT_THROW(Phi(std::numeric_limits<double>::quiet_NaN()), std::domain_error);
}

TEST(Phi, CdfValues) {
  EXPECT_EQ(Phi(0.0), 0.5);
  expect_rel(Phi(-5.0), kPhiMinus5, 1e-14);
  expect_rel(Phi(2.0), 0.97724986805182079280, 1e-15);
  // Normalized down to -37; subnormal but still positive at -38.
  EXPECT_GT(Phi(-37.0), std::numeric_limits<double>::min());
  EXPECT_GT(Phi(-38.0), 0.0);
}

TEST(Phi, ComplementOnDenseGrid) {
  for (double x = -37.0; x <= 37.0; x += 0.01) {
    ASSERT_LT(std::fabs(Phi(x) + Phi(-x) - 1.0), 1e-14) << x;
  }
}

TEST(Phi, SymmetryOfDensity) {
  for (double x = -40.0; x <= 40.0; x += 0.37) ASSERT_EQ(phi(x), phi(-x));
}

TEST(LogPhi, ReferenceValues) {
  EXPECT_DOUBLE_EQ(log_Phi(0.0), std::log(0.5));
  expect_rel(log_Phi(-10.0), kLogPhiMinus10, 1e-14);
  expect_rel(log_Phi(-5.0), -15.064998393988725736, 1e-14);
  expect_rel(log_Phi(-30.0), -454.32124395634319711, 1e-14);
  expect_rel(log_Phi(-31.0), -484.85396362717928858, 1e-14);
  expect_rel(log_Phi(-40.0), -804.60844201375378817, 1e-14);
  expect_rel(log_Phi(-600.0), -180007.31587096617931, 1e-14);
  expect_rel(log_Phi(3.0), -0.0013508099647481937988, 1e-13);
  expect_rel(log_Phi(8.0), -6.2209605742717860585e-16, 1e-12);
}

TEST(LogPhi, TendsToZeroFromBelow) {
  for (double x : {5.0, 10.0, 20.0, 30.0}) {
    EXPECT_LE(log_Phi(x), 0.0);
    const double q = Phi(-x);
    EXPECT_NEAR(log_Phi(x), -q - q * q / 2.0 - q * q * q / 3.0, 1e-15 * q);
  }
}

TEST(LogPhi, MatchesTwoTermAsymptoticInTail) {
  for (double x = -600.0; x <= -30.0; x += 0.5) {
    const double approx = -0.5 * x * x - std::log(-x) - 0.5 * std::log(2.0 * M_PI) + std::log(1.0 - 1.0 / (x * x));
    ASSERT_LT(std::fabs(log_Phi(x) - approx), 1e-6 * std::fabs(approx)) << x;
  }
}

TEST(LogPhi, FiniteAndIncreasing) {
  double prev = -std::numeric_limits<double>::infinity();
  for (double x = -600.0; x <= 40.0; x += 0.05) {
    const double v = log_Phi(x);
    ASSERT_TRUE(std::isfinite(v)) << x;
    ASSERT_GE(v, prev) << x;
    prev = v;
  }
}

TEST(LogPhi, ContinuousAcrossTailSwitch) {
  const double below = log_Phi(std::nextafter(kTailSwitch, -100.0));
  const double above = log_Phi(kTailSwitch);
  EXPECT_LT(std::fabs(below - above), 1e-12 * std::fabs(above));
}

TEST(Mills, LowerValues) {
  EXPECT_NEAR(mills_lower(0.0), 0.7978845608028654, 1e-15);
  expect_rel(mills_lower(-10.0), kMillsLowerMinus10, 1e-13);
  expect_rel(mills_lower(-5.0), 5.1865039671258421156, 1e-14);
  expect_rel(mills_lower(-31.0), 31.032191276777724727, 1e-14);
  expect_rel(mills_lower(2.0), 0.055247862678989959102, 1e-14);
}

TEST(Mills, LowerApproachesAbsoluteValue) {
  // mills_lower(x) ~ |x| + 1/|x|, so x + mills_lower(x) -> 0+
  const double s = -30.0 + mills_lower(-30.0);
  EXPECT_GT(s, 0.0);
  EXPECT_NEAR(mills_lower(-30.0), 30.0 + 1.0 / 30.0, 1e-3);
  EXPECT_GT(shifted_mills_lower(-1e6), 0.0);
  EXPECT_NEAR(shifted_mills_lower(-1e6), 1e-6, 1e-17);
}

TEST(Mills, UpperValuesAndReflection) {
  EXPECT_NEAR(mills_upper(0.0), 0.7978845608028654, 1e-15);
  expect_rel(mills_upper(1.0), kMillsUpper1, 1e-14);
  expect_rel(mills_upper(10.0), kMillsLowerMinus10, 1e-13);
  for (double x = -50.0; x <= 50.0; x += 0.25) {
    ASSERT_LE(std::fabs(mills_upper(x) - mills_lower(-x)), 1e-13 * mills_lower(-x));
  }
}

TEST(Mills, ShiftedRatioIsIncreasing) {
  double prev = 0.0;
  for (double x = -600.0; x <= 30.0; x += 0.01) {
    const double v = shifted_mills_lower(x);
    ASSERT_GT(v, prev) << x;
    prev = v;
  }
}

TEST(Mills, ShiftedRatioReferenceValues) {
  expect_rel(shifted_mills_lower(-10.0), 0.098093233962511962844, 1e-14);
  expect_rel(shifted_mills_lower(-30.0), 0.033259667433677037071, 1e-14);
  expect_rel(shifted_mills_lower(-100.0), 0.0099980009992607051849, 1e-14);
  expect_rel(shifted_mills_lower(-600.0), 0.0016666574075360055871, 1e-14);
  expect_rel(shifted_mills_lower(1.0), 1.2875999709391783612, 1e-15);
}

TEST(Mills, ShiftedDerivativeReferenceValues) {
  expect_rel(shifted_mills_lower_derivative(-3.0), 0.070559186785268116862, 1e-12);
  expect_rel(shifted_mills_lower_derivative(2.0), 0.88645194831142355021, 1e-14);
  expect_rel(shifted_mills_lower_derivative(-40.0), 0.00062266837859138877350, 1e-12);
  expect_rel(shifted_mills_lower_derivative(-100.0), 9.9940049948263450362e-5, 1e-12);
}

TEST(Mills, ShiftedDerivativeMatchesCentralDifference) {
  for (double x = -200.0; x <= 10.0; x += 1.3) {
    const double h = 1e-4 * std::max(1.0, std::fabs(x));
    const double fd = (shifted_mills_lower(x + h) - shifted_mills_lower(x - h)) / (2.0 * h);
    ASSERT_NEAR(shifted_mills_lower_derivative(x), fd, 1e-6 * std::max(1e-3, fd)) << x;
  }
}

TEST(PhiInverse, ReferenceValues) {
  expect_rel(Phi_inverse(1e-300), -37.047096299361199237, 1e-14);
  expect_rel(Phi_inverse(0.975), 1.9599639845400542355, 1e-15);
  // 1 - p carries the rounding error of p itself here.
  expect_rel(Phi_inverse(0.999999), 4.7534243088228989482, 5e-12);
  EXPECT_EQ(Phi_inverse(0.5), 0.0);
}

TEST(PhiInverse, RoundTripLowerTail) {
  for (double x = -37.0; x <= 0.0; x += 0.013) {
    ASSERT_NEAR(Phi_inverse(Phi(x)), x, 1e-13 * std::max(1.0, std::fabs(x))) << x;
  }
}

TEST(PhiInverse, RejectsOutsideUnitInterval) {
  EXPECT_THROW(Phi_inverse(0.0), std::domain_error);
  EXPECT_THROW(Phi_inverse(1.0), std::domain_error);
  EXPECT_THROW(Phi_inverse(-0.1), std::domain_error);
}
