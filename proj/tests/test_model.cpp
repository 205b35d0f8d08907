#include <gtest/gtest.h>

#include <cmath>
#include <deque>

#include "seqstop/model.hpp"
#include "support.hpp"

using namespace seqstop;

namespace {

// Replays fixed standard-normal and uniform draws.
struct ScriptedStream {
  std::deque<double> normals;
  std::deque<double> uniforms;
  double normal() {
    const double z = normals.front();
    normals.pop_front();
    return z;
  }
  double uniform() {
    const double u = uniforms.front();
    uniforms.pop_front();
    return u;
  }
};

double integrate_slice(int n, Stage stage, double mu) {
  const double w = 12.0 * std::sqrt(2.0 * n);
  QuadratureSpec spec;
  spec.abs_tol = 1e-12;
  const double lo = stage == Stage::One ? 0.0 : -w + 2.0 * n * mu;
  const double hi = w + 2.0 * n * std::max(mu, 0.0);
  return integrate([&](double k) { return joint_density(n, stage, k, mu); }, lo, hi, spec).value;
}

}  // namespace

TEST(StopProbability, IndicatorStopsOnNonNegativeSum) {
  const auto rule = StoppingRule::indicator();
  EXPECT_EQ(stop_probability(rule, 5, 0.3), 1.0);
  EXPECT_EQ(stop_probability(rule, 5, -0.3), 0.0);
  EXPECT_EQ(stop_probability(rule, 5, 0.0), 1.0);
  // gamma does not change the indicator.
  EXPECT_EQ(stop_probability(StoppingRule::indicator(0.0), 7, -1e-9), 0.0);
}

TEST(StopProbability, SmoothRules) {
  EXPECT_EQ(stop_probability(StoppingRule::constant(1.0), 3, -12.0), 1.0);
  // logistic psi at z = K_n / n^gamma
  const auto pocock = StoppingRule::logistic(1.0, 0.5);
  EXPECT_NEAR(stop_probability(pocock, 4, 2.0), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
  const auto obf = StoppingRule::logistic(1.0, 0.0);
  EXPECT_NEAR(stop_probability(obf, 4, 2.0), 1.0 / (1.0 + std::exp(-2.0)), 1e-15);
  EXPECT_EQ(StoppingRule::pocock([](double) { return 0.2; }).gamma, 0.5);
  EXPECT_EQ(StoppingRule::obrien_fleming([](double) { return 0.2; }).gamma, 0.0);
}

TEST(StopProbability, RejectsBadInputs) {
  EXPECT_THROW(stop_probability(StoppingRule::indicator(), 0, 1.0), DomainError);
  const auto bad = StoppingRule::smooth([](double) { return 1.5; }, 0.5);
  EXPECT_THROW(stop_probability(bad, 1, 0.0), DomainError);
  EXPECT_THROW(StoppingRule::indicator(-1.0), DomainError);
  EXPECT_THROW(StoppingRule::smooth(nullptr, 0.5), DomainError);
}

TEST(SimulateTrial, ForcedInterimSums) {
  const TrialConfig config{4, 0.0, 1.0, StoppingRule::indicator()};
  ScriptedStream up{{1.0}, {}};  // K_4 = 2 * 1.0
  const auto a = simulate_trial(config, up);
  EXPECT_EQ(a.stage, Stage::One);
  EXPECT_EQ(a.k_interim, 2.0);
  EXPECT_EQ(a.k_final, 2.0);

  ScriptedStream down{{-0.5, 0.25}, {}};
  const auto b = simulate_trial(config, down);
  EXPECT_EQ(b.stage, Stage::Two);
  EXPECT_EQ(b.k_interim, -1.0);
  EXPECT_EQ(b.k_final, -0.5);
  EXPECT_EQ(b.sample_size(), 8);
}

TEST(SimulateTrial, SmoothRuleUsesIndependentUniform) {
  const TrialConfig config{1, 0.0, 1.0, StoppingRule::constant(0.3)};
  ScriptedStream stop{{0.0}, {0.29}};
  EXPECT_EQ(simulate_trial(config, stop).stage, Stage::One);
  ScriptedStream go{{0.0, 1.0}, {0.31}};
  EXPECT_EQ(simulate_trial(config, go).stage, Stage::Two);
}

TEST(SimulateTrial, MeanAndScaleEnterSums) {
  const TrialConfig config{9, 2.0, 3.0, StoppingRule::indicator()};
  ScriptedStream s{{-10.0, 1.0}, {}};
  const auto o = simulate_trial(config, s);  // K_9 = 18 + 9 * (-10)
  EXPECT_EQ(o.stage, Stage::Two);
  EXPECT_DOUBLE_EQ(o.k_interim, -72.0);
  EXPECT_DOUBLE_EQ(o.k_final, -72.0 + 18.0 + 9.0);
}

TEST(SimulateTrial, OutcomeInvariantsUnderIndicator) {
  CounterStream rng(7, 0);
  const TrialConfig config{3, 0.1, 1.0, StoppingRule::indicator()};
  for (int i = 0; i < 20000; ++i) {
    const auto o = simulate_trial(config, rng);
    if (o.stage == Stage::One) {
      ASSERT_GE(o.k_interim, 0.0);
      ASSERT_EQ(o.k_final, o.k_interim);
    } else {
      ASSERT_LT(o.k_interim, 0.0);
    }
  }
}

TEST(SimulateTrial, StageOneFrequencyIsOneHalfAtZeroMean) {
  CounterStream rng(2024, 0);
  const TrialConfig config{100, 0.0, 1.0, StoppingRule::indicator()};
  const long reps = 1'000'000;
  long one = 0;
  for (long i = 0; i < reps; ++i) one += simulate_trial(config, rng).stage == Stage::One;
  EXPECT_NEAR(static_cast<double>(one) / reps, 0.5, 3.0 * std::sqrt(0.25 / reps));
}

TEST(TrialConfig, Validation) {
  EXPECT_THROW((TrialConfig{0, 0.0, 1.0, StoppingRule::indicator()}.validate()), DomainError);
  EXPECT_THROW((TrialConfig{1, 0.0, 0.0, StoppingRule::indicator()}.validate()), DomainError);
  EXPECT_NO_THROW((TrialConfig{1, -3.0, 2.0, StoppingRule::indicator()}.validate()));
}

TEST(JointDensity, ClosedFormValues) {
  EXPECT_NEAR(joint_density(1, Stage::One, 0.0, 0.0), 0.3989422804014327, 1e-15);
  EXPECT_NEAR(joint_density(1, Stage::Two, 0.0, 0.0), 0.14104739588693907174, 1e-15);
  EXPECT_EQ(joint_density(1, Stage::One, -0.5, 0.0), 0.0);
  EXPECT_EQ(joint_density(3, Stage::One, -1e-12, 0.7), 0.0);
}

TEST(JointDensity, SlicesIntegrateToStageProbabilities) {
  for (int n : {1, 4, 25}) {
    const double one = integrate_slice(n, Stage::One, 0.0);
    const double two = integrate_slice(n, Stage::Two, 0.0);
    EXPECT_NEAR(one, 0.5, 1e-8) << n;
    EXPECT_NEAR(two, 0.5, 1e-8) << n;
    EXPECT_NEAR(one + two, 1.0, 1e-8) << n;
  }
}

TEST(JointDensity, NonZeroMeanSlicesMatchStageProbabilities) {
  for (const auto& [n, mu] : {std::pair{4, 0.3}, std::pair{1, -0.8}, std::pair{9, 0.05}}) {
    const auto [p1, p2] = stage_probabilities(n, mu);
    EXPECT_NEAR(integrate_slice(n, Stage::One, mu), p1, 1e-8);
    EXPECT_NEAR(integrate_slice(n, Stage::Two, mu), p2, 1e-8);
  }
}

TEST(JointDensity, ConvolutionMatchesClosedFormAtZeroMean) {
  for (int n : {1, 4}) {
    for (double k = -10.0; k <= 10.0; k += 0.25) {
      ASSERT_NEAR(joint_density_convolution(n, k, 0.0), joint_density(n, Stage::Two, k, 0.0), 1e-8) << n << " " << k;
    }
  }
}

TEST(JointDensity, ConvolutionIsContinuousInMean) {
  // mu -> 0 along the convolution route approaches the closed form.
  EXPECT_NEAR(joint_density(4, Stage::Two, -1.3, 1e-9), joint_density(4, Stage::Two, -1.3, 0.0), 1e-8);
}

TEST(JointDensity, RejectsSmoothRule) {
  EXPECT_THROW(joint_density(StoppingRule::logistic(1.0, 0.5), 1, Stage::One, 0.0, 0.0), UnsupportedError);
  EXPECT_NO_THROW(joint_density(StoppingRule::indicator(), 1, Stage::One, 0.0, 0.0));
}

TEST(StageProbabilities, Values) {
  const auto [a, b] = stage_probabilities(17, 0.0);
  EXPECT_EQ(a, 0.5);
  EXPECT_EQ(b, 0.5);
  const auto [c, d] = stage_probabilities(4, 1.0);
  EXPECT_NEAR(c, 0.97724986805182079280, 1e-15);
  EXPECT_NEAR(d, 0.02275013194817920720, 1e-15);
}

TEST(JointDensity, SimulationPassesChiSquare) {
  const auto chi = test_support::density_chi_square(25, 1'000'000, 99, 50);
  EXPECT_EQ(chi.degrees_of_freedom, 99);
  EXPECT_GT(chi.min_expected, 5.0);
  EXPECT_LT(chi.statistic, test_support::kChiSquare99At001);
}

TEST(Standardize, RescalesSumsAndRule) {
  const auto o = standardized(TrialOutcome::stage_two(2, -4.0, 6.0), 2.0);
  EXPECT_EQ(o.k_interim, -2.0);
  EXPECT_EQ(o.k_final, 3.0);
  const auto rule = standardized(StoppingRule::logistic(1.0, 0.0), 2.0);
  EXPECT_NEAR(stop_probability(rule, 1, 0.5), 1.0 / (1.0 + std::exp(-1.0)), 1e-15);
}
