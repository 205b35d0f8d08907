// Helpers shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "seqstop/model.hpp"
#include "seqstop/quadrature.hpp"
#include "seqstop/random.hpp"
#include "seqstop/special.hpp"

namespace seqstop::test_support {

struct ChiSquare {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double min_expected = 0.0;
};

// Upper 0.001 quantile of chi-square with 99 degrees of freedom
// (scipy.stats.chi2.ppf(0.999, 99)).
inline constexpr double kChiSquare99At001 = 148.23035916510173;

/// Pearson chi-square of simulated (stage, K_N) against the exact joint
/// density at mu = 0 under the indicator rule. Bin edges are equiprobable
/// per stage: stage one is half-normal, and the stage-two law of
/// s = k / sqrt(2n) has CDF Phi(s) - Phi(s)^2 / 2. Expected probabilities are
/// the quadrature of joint_density over each bin.
inline ChiSquare density_chi_square(int n, long reps, std::uint64_t seed, int bins) {
  const double rn = std::sqrt(static_cast<double>(n));
  const double r2n = std::sqrt(2.0 * n);
  std::vector<double> one_edges{0.0};
  std::vector<double> two_edges{-INFINITY};
  for (int i = 1; i < bins; ++i) {
    const double c = 0.5 * i / bins;
    one_edges.push_back(rn * special::Phi_inverse(0.5 + c));
    two_edges.push_back(r2n * special::Phi_inverse(1.0 - std::sqrt(1.0 - 2.0 * c)));
  }
  one_edges.push_back(INFINITY);
  two_edges.push_back(INFINITY);

  auto bin_mass = [&](Stage stage, double lo, double hi) {
    const double cut = 14.0 * r2n;
    lo = std::max(lo, -cut);
    hi = std::min(hi, cut);
    QuadratureSpec spec;
    spec.abs_tol = 1e-13;
    return integrate([&](double k) { return joint_density(n, stage, k, 0.0); }, lo, hi, spec).value;
  };

  std::vector<long> one(bins), two(bins);
  CounterStream rng(seed, 0);
  const TrialConfig config{n, 0.0, 1.0, StoppingRule::indicator()};
  for (long r = 0; r < reps; ++r) {
    const auto o = simulate_trial(config, rng);
    const auto& edges = o.stage == Stage::One ? one_edges : two_edges;
    const auto it = std::upper_bound(edges.begin(), edges.end(), o.k_final);
    const long j = std::clamp<long>(it - edges.begin() - 1, 0, bins - 1);
    (o.stage == Stage::One ? one : two)[j]++;
  }

  ChiSquare out;
  out.min_expected = INFINITY;
  for (int j = 0; j < bins; ++j) {
    for (const Stage s : {Stage::One, Stage::Two}) {
      const auto& edges = s == Stage::One ? one_edges : two_edges;
      const double expected = reps * bin_mass(s, edges[j], edges[j + 1]);
      const double observed = (s == Stage::One ? one : two)[j];
      out.statistic += (observed - expected) * (observed - expected) / expected;
      out.min_expected = std::min(out.min_expected, expected);
    }
  }
  out.degrees_of_freedom = 2 * bins - 1;
  return out;
}

}  // namespace seqstop::test_support
