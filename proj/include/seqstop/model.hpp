// Two-stage group-sequential model: stopping rules, trial simulation and the
// exact joint density of (final sample size, final sum).
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "seqstop/errors.hpp"
#include "seqstop/quadrature.hpp"
#include "seqstop/random.hpp"
#include "seqstop/special.hpp"

namespace seqstop {

enum class Stage { One, Two };

inline const char* to_string(Stage s) { return s == Stage::One ? "one" : "two"; }

/// Probability of stopping after the first stage as a function of the
/// standardized interim statistic K_n / n^gamma.
///
/// gamma = 1/2 gives Pocock-type boundaries, gamma = 0 O'Brien-Fleming-type.
/// The Indicator kind is psi = 1_[0,inf); K_n = 0 stops.
struct StoppingRule {
  enum class Kind { Indicator, Smooth };

  Kind kind = Kind::Indicator;
  std::function<double(double)> psi;
  // Optional 1 - psi, for rules where the subtraction would cancel.
  std::function<double(double)> psi_complement;
  double gamma = 0.5;

  static StoppingRule indicator(double gamma = 0.5) {
    StoppingRule r;
    r.kind = Kind::Indicator;
    r.gamma = gamma;
    r.validate();
    return r;
  }

  static StoppingRule smooth(std::function<double(double)> psi, double gamma,
                             std::function<double(double)> complement = {}) {
    StoppingRule r;
    r.kind = Kind::Smooth;
    r.psi = std::move(psi);
    r.psi_complement = std::move(complement);
    r.gamma = gamma;
    r.validate();
    return r;
  }

  static StoppingRule pocock(std::function<double(double)> psi) { return smooth(std::move(psi), 0.5); }
  static StoppingRule obrien_fleming(std::function<double(double)> psi) { return smooth(std::move(psi), 0.0); }

  // psi(z) = 1 / (1 + exp(-z / scale)).
  static StoppingRule logistic(double scale, double gamma) {
    if (!(scale > 0.0)) throw DomainError("logistic rule: scale must be positive");
    return smooth([scale](double z) { return 1.0 / (1.0 + std::exp(-z / scale)); }, gamma,
                  [scale](double z) { return 1.0 / (1.0 + std::exp(z / scale)); });
  }

  static StoppingRule constant(double p, double gamma = 0.5) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("constant rule: probability must lie in [0, 1]");
    return smooth([p](double) { return p; }, gamma);
  }

  bool is_indicator() const { return kind == Kind::Indicator; }

  void validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("StoppingRule: gamma must be a finite non-negative real");
    if (kind == Kind::Smooth && !psi) throw DomainError("StoppingRule: smooth rule needs a psi function");
  }
};

/// psi(k_n / n^gamma), the probability of stopping at n given K_n = k_n.
inline double stop_probability(const StoppingRule& rule, int n, double k_n) {
  if (n < 1) throw DomainError("stop_probability: n must be at least 1");
  if (rule.is_indicator()) return k_n >= 0.0 ? 1.0 : 0.0;
  const double p = rule.psi(k_n / std::pow(static_cast<double>(n), rule.gamma));
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("stop_probability: psi returned a value outside [0, 1]");
  return p;
}

/// 1 - stop_probability, using the rule's complement when it has one.
inline double continue_probability(const StoppingRule& rule, int n, double k_n) {
  if (n < 1) throw DomainError("continue_probability: n must be at least 1");
  if (rule.is_indicator()) return k_n >= 0.0 ? 0.0 : 1.0;
  if (!rule.psi_complement) return 1.0 - stop_probability(rule, n, k_n);
  const double q = rule.psi_complement(k_n / std::pow(static_cast<double>(n), rule.gamma));
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("continue_probability: complement outside [0, 1]");
  return q;
}

struct TrialConfig {
  int n = 1;
  double mu = 0.0;
  double sigma = 1.0;
  StoppingRule rule = StoppingRule::indicator();

  void validate() const {
    if (n < 1) throw DomainError("TrialConfig: n must be at least 1");
    if (!std::isfinite(mu)) throw DomainError("TrialConfig: mu must be finite");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("TrialConfig: sigma must be positive");
    rule.validate();
  }
};

struct TrialOutcome {
  Stage stage = Stage::One;
  int n = 1;
  double k_interim = 0.0;
  double k_final = 0.0;

  int sample_size() const { return stage == Stage::One ? n : 2 * n; }

  static TrialOutcome stage_one(int n, double k) { return {Stage::One, n, k, k}; }
  static TrialOutcome stage_two(int n, double k_interim, double k_final) {
    return {Stage::Two, n, k_interim, k_final};
  }
};

/// One trial. Stage sums are drawn directly from their exact normal laws
/// (K_n ~ N(n mu, n sigma^2), K_2n - K_n independent with the same law), which
/// is equivalent to summing the individual observations.
template <RandomStream R>
TrialOutcome simulate_trial(const TrialConfig& config, R& rng) {
  const double n = config.n;
  const double sd = config.sigma * std::sqrt(n);
  const double k_interim = n * config.mu + sd * rng.normal();
  bool stop;
  if (config.rule.is_indicator()) {
    stop = k_interim >= 0.0;
  } else {
    stop = rng.uniform() < stop_probability(config.rule, config.n, k_interim);
  }
  if (stop) return TrialOutcome::stage_one(config.n, k_interim);
  const double k_final = k_interim + n * config.mu + sd * rng.normal();
  return TrialOutcome::stage_two(config.n, k_interim, k_final);
}

/// (P[N = n], P[N = 2n]) under the indicator rule with unit variance.
inline std::pair<double, double> stage_probabilities(int n, double mu) {
  if (n < 1) throw DomainError("stage_probabilities: n must be at least 1");
  const double z = std::sqrt(static_cast<double>(n)) * mu;
  return {special::Phi(z), special::Phi(-z)};
}

/// Stage-two slice of the joint density by numerical convolution:
/// integral over u < 0 of f_{K_n}(u) f_{K_n}(k - u), with K_n ~ N(n mu, n).
inline double joint_density_convolution(int n, double k, double mu, const QuadratureSpec& spec = {}) {
  if (n < 1) throw DomainError("joint_density: n must be at least 1");
  const double nn = n;
  const double sd = std::sqrt(nn);
  auto integrand = [&](double u) {
    return special::phi((u - nn * mu) / sd) * special::phi((k - u - nn * mu) / sd) / nn;
  };
  // As a function of u the product is a normal kernel centred at k/2 with
  // standard deviation sqrt(n/2).
  const double centre = 0.5 * k;
  const double width = spec.cutoff * std::sqrt(0.5 * nn);
  const double lo = centre - width;
  const double hi = std::min(0.0, centre + width);
  if (hi <= lo) return 0.0;
  QuadratureSpec local = spec;
  // The density itself is O(1/sqrt(n)); keep the tolerance relative to that.
  local.abs_tol = spec.abs_tol * 1e-2;
  if (centre > lo && centre < hi) {
    return integrate_checked(integrand, lo, centre, local, "joint_density") +
           integrate_checked(integrand, centre, hi, local, "joint_density");
  }
  return integrate_checked(integrand, lo, hi, local, "joint_density");
}

/// Joint density of (N_n, K_{N_n}) at (stage, k) under the indicator rule,
/// sigma = 1. Closed forms at mu = 0, convolution quadrature otherwise.
inline double joint_density(int n, Stage stage, double k, double mu, const QuadratureSpec& spec = {}) {
  if (n < 1) throw DomainError("joint_density: n must be at least 1");
  special::detail::require_finite(k, "joint_density");
  special::detail::require_finite(mu, "joint_density");
  const double nn = n;
  if (stage == Stage::One) {
    if (k < 0.0) return 0.0;
    const double sd = std::sqrt(nn);
    return special::phi((k - nn * mu) / sd) / sd;
  }
  if (mu == 0.0) {
    const double sd = std::sqrt(2.0 * nn);
    const double z = k / sd;
    return special::phi(z) * special::Phi(-z) / sd;
  }
  return joint_density_convolution(n, k, mu, spec);
}

inline double joint_density(const StoppingRule& rule, int n, Stage stage, double k, double mu,
                            const QuadratureSpec& spec = {}) {
  if (!rule.is_indicator()) {
    throw UnsupportedError("joint_density: only the indicator stopping rule has an exact density");
  }
  return joint_density(n, stage, k, mu, spec);
}

/// Outcome expressed in units of sigma. Densities and estimators work with
/// sigma = 1; data with another sigma are rescaled here.
inline TrialOutcome standardized(const TrialOutcome& outcome, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("standardized: sigma must be positive");
  return {outcome.stage, outcome.n, outcome.k_interim / sigma, outcome.k_final / sigma};
}

/// The rule seen by standardized sums: psi'(z) = psi(sigma z).
inline StoppingRule standardized(const StoppingRule& rule, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("standardized: sigma must be positive");
  if (rule.is_indicator() || sigma == 1.0) return rule;
  auto psi = rule.psi;
  std::function<double(double)> complement;
  if (rule.psi_complement) {
    complement = [q = rule.psi_complement, sigma](double z) { return q(sigma * z); };
  }
  return StoppingRule::smooth([psi, sigma](double z) { return psi(sigma * z); }, rule.gamma, std::move(complement));
}

}  // namespace seqstop
