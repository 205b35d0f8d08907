// Marginal and conditional maximum likelihood estimators of the mean after a
// two-stage trial, with unit variance.
//
// Under the indicator rule the conditional MLE solves
//   stage one:  K_n / sqrt(n)   = psi1(sqrt(n) theta),  psi1(x) = x + phi(x)/Phi(x)
//   stage two:  K_2n / sqrt(2n) = psi2(sqrt(n) theta),  psi2(x) = sqrt2 x - phi(x)/(sqrt2 (1 - Phi(x)))
// The minus sign in psi2 comes from d/dtheta [-log Phi(-sqrt(n) theta)] > 0:
// conditioning on a negative interim sum pushes the estimate up.
// Both maps are strictly increasing, psi1 from 0 to inf and psi2 from -inf to
// inf, so each equation has exactly one root.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "seqstop/errors.hpp"
#include "seqstop/model.hpp"
#include "seqstop/quadrature.hpp"
#include "seqstop/special.hpp"

namespace seqstop {

enum class Method { Marginal, ConditionalClosed, ConditionalGeneric };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Marginal: return "marginal";
    case Method::ConditionalClosed: return "conditional_closed";
    case Method::ConditionalGeneric: return "conditional_generic";
  }
  return "?";
}

struct Estimate {
  double value = 0.0;
  Method method = Method::Marginal;
  int iterations = 0;
  // Final residual of the score equation; 0 for the marginal MLE.
  double residual = 0.0;
  // Search interval used by the generic optimizer (equal to value otherwise).
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

// ---------------------------------------------------------------------------
// Marginal likelihood

inline Estimate marginal_mle(const TrialOutcome& outcome) {
  const double v = outcome.k_final / outcome.sample_size();
  return {v, Method::Marginal, 0, 0.0, v, v};
}

/// Marginal log-likelihood up to a theta-free constant.
inline double marginal_loglik(double theta, const TrialOutcome& outcome) {
  const double size = outcome.sample_size();
  const double r = outcome.k_final - size * theta;
  return -r * r / (2.0 * size);
}

// ---------------------------------------------------------------------------
// Score transforms

struct ScoreTransform {
  Stage stage = Stage::One;

  static constexpr ScoreTransform one() { return {Stage::One}; }
  static constexpr ScoreTransform two() { return {Stage::Two}; }
};

inline double score_eval(ScoreTransform t, double x) {
  if (t.stage == Stage::One) return special::shifted_mills_lower(x);
  // sqrt2 x - (x + s) / sqrt2 with s = mills_upper(x) - x, free of cancellation.
  return (x - special::shifted_mills_lower(-x)) / std::numbers::sqrt2;
}

inline double score_derivative(ScoreTransform t, double x) {
  if (t.stage == Stage::One) return special::shifted_mills_lower_derivative(x);
  // d/dx mills_upper(x) = mills_upper(x) (mills_upper(x) - x), and
  // mills_upper(x) - x = shifted_mills_lower(-x) without cancellation. The
  // product lies in (0, 1), so the slope stays within (1/sqrt2, sqrt2).
  return std::numbers::sqrt2 - special::mills_upper(x) * special::shifted_mills_lower(-x) / std::numbers::sqrt2;
}

struct Inversion {
  double x = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

inline constexpr int kMaxSolverIterations = 200;
inline constexpr double kScoreTolerance = 1e-12;

namespace detail {

// Geometric growth until [lo, hi] brackets y; psi increasing.
template <class F>
void grow_bracket(F&& psi, double y, double& lo, double& hi) {
  double step = std::max(1.0, hi - lo);
  for (int i = 0; i < 200 && psi(lo) > y; ++i) {
    hi = lo;
    lo -= step;
    step *= 2.0;
  }
  step = std::max(1.0, hi - lo);
  for (int i = 0; i < 200 && psi(hi) < y; ++i) {
    lo = hi;
    hi += step;
    step *= 2.0;
  }
  if (!(psi(lo) <= y && psi(hi) >= y)) throw SolverError("score_invert: could not bracket the root");
}

}  // namespace detail

/// Solve score_eval(t, x) = y by Newton's method safeguarded with bisection.
inline Inversion score_invert_detailed(ScoreTransform t, double y) {
  if (!std::isfinite(y)) throw DomainError("score_invert: y must be finite");
  auto psi = [t](double x) { return score_eval(t, x); };

  double lo;
  double hi;
  double x;
  if (t.stage == Stage::One) {
    if (!(y > 0.0)) throw DomainError("score_invert: y = " + std::to_string(y) + " is outside range of psi1 (0, inf)");
    const double at_zero = 2.0 * special::kInvSqrt2Pi;
    if (y >= at_zero) {
      lo = 0.0;
      hi = y;  // psi1(x) > x
      x = std::max(0.0, y - special::mills_lower(y));
    } else {
      // psi1(x) ~ -1/x in the lower tail.
      lo = -2.0 / y;
      hi = 0.0;
      x = y < 0.3 ? -1.0 / y : -0.5 / y;
    }
  } else {
    lo = y / std::numbers::sqrt2 - 1.0;
    hi = y / std::numbers::sqrt2 + 1.0;
    x = y >= 0.0 ? y * std::numbers::sqrt2 : y / std::numbers::sqrt2;  // psi2(x) ~ x / sqrt2 for large x
  }
  detail::grow_bracket(psi, y, lo, hi);
  x = std::clamp(x, lo, hi);

  const double tol = kScoreTolerance * std::max(1.0, std::fabs(y));
  constexpr double eps = std::numeric_limits<double>::epsilon();
  int it = 0;
  for (; it < kMaxSolverIterations; ++it) {
    const double f = psi(x) - y;
    if (f == 0.0) break;
    if (f < 0.0) lo = x; else hi = x;
    double next = x - f / score_derivative(t, x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double scale = std::max(1.0, std::fabs(x));
    const bool small_step = std::fabs(next - x) <= 4.0 * eps * scale;
    x = next;
    if (small_step || hi - lo <= 4.0 * eps * scale) break;
  }
  const double residual = std::fabs(psi(x) - y);
  if (residual > tol) {
    throw SolverError("score_invert: no convergence after " + std::to_string(it) +
                      " iterations (residual " + std::to_string(residual) + ")");
  }
  return {x, it + 1, residual};
}

inline double score_invert(ScoreTransform t, double y) { return score_invert_detailed(t, y).x; }

// ---------------------------------------------------------------------------
// Conditional likelihood

/// Closed-path conditional MLE under the indicator rule.
inline Estimate conditional_mle(const TrialOutcome& outcome) {
  const double rn = std::sqrt(static_cast<double>(outcome.n));
  Inversion inv;
  if (outcome.stage == Stage::One) {
    if (outcome.k_final == 0.0) {
      throw DomainError("conditional_mle: degenerate statistic (K_n = 0 maps to -inf)");
    }
    if (outcome.k_final < 0.0) {
      throw DomainError("conditional_mle: stage-one sum is inconsistent with stopping rule (K_n < 0)");
    }
    inv = score_invert_detailed(ScoreTransform::one(), outcome.k_final / rn);
  } else {
    inv = score_invert_detailed(ScoreTransform::two(), outcome.k_final / (std::numbers::sqrt2 * rn));
  }
  const double v = inv.x / rn;
  return {v, Method::ConditionalClosed, inv.iterations, inv.residual, v, v};
}

namespace detail {

// log E[w(Z)] and E[w(Z) Z] / E[w(Z)] for Z ~ N(0,1), where w is the
// probability of the realized stage given K_n = n theta + sqrt(n) Z.
//
// The integral runs over k = K_n around the peak k_c of w(k) phi, with the
// Gaussian exponent taken relative to k_c in product form,
//   -((k - n theta)^2 - (k_c - n theta)^2) / 2n = -(k - k_c)(k + k_c - 2 n theta) / 2n,
// so tiny stage probabilities keep their relative accuracy and the rescaled
// integrand carries no cancellation noise.
struct StageMoments {
  double log_mass;
  double mean;
};

inline StageMoments smooth_stage_moments(double theta, Stage stage, int n, const StoppingRule& rule,
                                         const QuadratureSpec& spec) {
  const double nn = n;
  const double rn = std::sqrt(nn);
  const double m = nn * theta;
  auto log_w = [&](double k) {
    return std::log(stage == Stage::One ? stop_probability(rule, n, k) : continue_probability(rule, n, k));
  };
  constexpr double kNone = std::numeric_limits<double>::quiet_NaN();

  // The mass sits near z = 0 or near the boundary z = -sqrt(n) theta.
  const double reach = 40.0 + std::fabs(rn * theta);
  const int points = std::max(320, static_cast<int>(std::min(8.0 * reach, 20'000.0)));
  double peak = -std::numeric_limits<double>::infinity();
  double kc = m;
  for (int i = 0; i <= points; ++i) {
    const double z = -reach + 2.0 * reach * i / points;
    const double v = log_w(m + rn * z) - 0.5 * z * z;
    if (v > peak) {
      peak = v;
      kc = m + rn * z;
    }
  }
  if (!std::isfinite(peak)) return {-std::numeric_limits<double>::infinity(), kNone};

  const double log_wc = log_w(kc);
  const double zc = (kc - m) / rn;
  auto scaled = [&](double k) {
    return std::exp(log_w(k) - log_wc - (k - kc) * (k + kc - 2.0 * m) / (2.0 * nn));
  };
  QuadratureSpec local = spec;
  local.abs_tol = std::min(spec.abs_tol, 1e-13);
  const double mass = integrate_line(scaled, kc, rn, local).value;
  const double offset = integrate_line([&](double k) { return scaled(k) * (k - kc); }, kc, rn, local).value;
  if (!(mass > 0.0)) return {-std::numeric_limits<double>::infinity(), kNone};
  const double log_mass = log_wc - 0.5 * zc * zc - special::kLogSqrt2Pi + std::log(mass / rn);
  return {log_mass, zc + offset / mass / rn};
}

}  // namespace detail

/// log P_theta[N_n = N] for the realized stage.
inline double log_stage_probability(double theta, const TrialOutcome& outcome, const StoppingRule& rule,
                                    const QuadratureSpec& spec = {}) {
  const double x = std::sqrt(static_cast<double>(outcome.n)) * theta;
  if (rule.is_indicator()) {
    return outcome.stage == Stage::One ? special::log_Phi(x) : special::log_Phi(-x);
  }
  return detail::smooth_stage_moments(theta, outcome.stage, outcome.n, rule, spec).log_mass;
}

/// Conditional log-likelihood up to a theta-free constant:
/// -(K_N - N theta)^2 / (2N) - log P_theta[N_n = N].
inline double conditional_loglik(double theta, const TrialOutcome& outcome, const StoppingRule& rule,
                                 const QuadratureSpec& spec = {}) {
  return marginal_loglik(theta, outcome) - log_stage_probability(theta, outcome, rule, spec);
}

/// Derivative of conditional_loglik in theta.
inline double conditional_score(double theta, const TrialOutcome& outcome, const StoppingRule& rule,
                                const QuadratureSpec& spec = {}) {
  const double rn = std::sqrt(static_cast<double>(outcome.n));
  const double base = outcome.k_final - outcome.sample_size() * theta;
  const double x = rn * theta;
  if (rule.is_indicator()) {
    // base - sqrt(n) mills_lower(x) and base + sqrt(n) mills_upper(x), written
    // through the score transforms to avoid cancellation for large |x|.
    if (outcome.stage == Stage::One) return rn * (outcome.k_final / rn - score_eval(ScoreTransform::one(), x));
    const double r2n = std::numbers::sqrt2 * rn;
    return r2n * (outcome.k_final / r2n - score_eval(ScoreTransform::two(), x));
  }
  const auto m = detail::smooth_stage_moments(theta, outcome.stage, outcome.n, rule, spec);
  return base - rn * m.mean;
}

struct GenericSearch {
  double lo = -50.0;
  double hi = 50.0;
  int grid = 400;
};

/// Numerical maximizer of the conditional likelihood for any stopping rule:
/// grid scan for a bracket, golden-section narrowing, then bisection on the
/// sign of the score.
inline Estimate conditional_mle_generic(const TrialOutcome& outcome, const StoppingRule& rule,
                                        const GenericSearch& search = {}, const QuadratureSpec& spec = {}) {
  if (rule.is_indicator() && outcome.stage == Stage::One && !(outcome.k_final > 0.0)) {
    throw DomainError(outcome.k_final == 0.0 ? "conditional_mle_generic: degenerate statistic (K_n = 0)"
                                             : "conditional_mle_generic: stage-one sum is inconsistent with stopping rule");
  }
  // Points where the stage probability underflows are skipped.
  auto loglik = [&](double t) {
    const double v = conditional_loglik(t, outcome, rule, spec);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };
  auto score = [&](double t) { return conditional_score(t, outcome, rule, spec); };

  const double step = (search.hi - search.lo) / search.grid;
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= search.grid; ++i) {
    const double v = loglik(search.lo + i * step);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  if (best == 0 || best == search.grid) {
    throw SolverError("conditional_mle_generic: no bracket found within theta in [" + std::to_string(search.lo) +
                      ", " + std::to_string(search.hi) + "]");
  }
  const double bracket_lo = search.lo + (best - 1) * step;
  const double bracket_hi = search.lo + (best + 1) * step;
  int iterations = search.grid + 1;

  // Golden section.
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = bracket_lo;
  double b = bracket_hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = loglik(c);
  double fd = loglik(d);
  while (b - a > 1e-6 * std::max(1.0, std::fabs(a)) && iterations < 10'000) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = loglik(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = loglik(d);
    }
    ++iterations;
  }
  // The score is positive left of the maximum and negative right of it.
  if (!(score(a) > 0.0 && score(b) < 0.0)) {
    a = bracket_lo;
    b = bracket_hi;
  }
  if (score(a) > 0.0 && score(b) < 0.0) {
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (score(mid) > 0.0) a = mid; else b = mid;
      ++iterations;
    }
  }
  const double v = 0.5 * (a + b);
  return {v, Method::ConditionalGeneric, iterations, std::fabs(score(v)), bracket_lo, bracket_hi};
}

}  // namespace seqstop
