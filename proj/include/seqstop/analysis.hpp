// Mean absolute error of the marginal MLE, and the truncated lower bound on
// the mean absolute error of the conditional MLE whose divergence in the
// truncation level shows that the latter is infinite.
//
// Setting throughout: mu = 0, sigma = 1, indicator stopping rule.
#pragma once

#include <cmath>
#include <future>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "seqstop/errors.hpp"
#include "seqstop/estimators.hpp"
#include "seqstop/quadrature.hpp"
#include "seqstop/special.hpp"

namespace seqstop {

/// E[f(xi)] for xi ~ N(0,1), integrated over [-cutoff, cutoff] split at 0.
template <class F>
double normal_expectation(F&& f, const QuadratureSpec& spec = {}) {
  auto integrand = [&](double x) { return f(x) * special::phi(x); };
  return integrate_checked(integrand, -spec.cutoff, 0.0, spec, "normal_expectation") +
         integrate_checked(integrand, 0.0, spec.cutoff, spec, "normal_expectation");
}

struct MaeReport {
  int n = 1;
  double mae = 0.0;
  double stage_one_term = 0.0;
  double stage_two_term = 0.0;
};

/// E|marginal MLE| = (E[xi 1{xi >= 0}] + E[|xi| (1 - Phi(xi))] / sqrt2) / sqrt(n).
inline MaeReport marginal_mae(int n, const QuadratureSpec& spec = {}) {
  if (n < 1) throw DomainError("marginal_mae: n must be at least 1");
  const double first = normal_expectation([](double x) { return x >= 0.0 ? x : 0.0; }, spec);
  const double second =
      normal_expectation([](double x) { return std::fabs(x) * special::Phi(-x); }, spec) / std::numbers::sqrt2;
  const double rn = std::sqrt(static_cast<double>(n));
  return {n, (first + second) / rn, first / rn, second / rn};
}

struct TruncatedBound {
  int n = 1;
  double level = 0.0;  // truncation level N of sqrt(n) * estimate
  double value = 0.0;
};

/// phi(psi1(0)), the constant lower bound of the normal weight on
/// [psi1(-N), psi1(0)].
inline double bound_weight() { return special::phi(2.0 * special::kInvSqrt2Pi); }

/// log(1/2) + N^2/2 - log Phi(-N) - N phi(-N)/Phi(-N), evaluated without the
/// O(N^2) cancellation. With m = phi(N)/Phi(-N) and s = m - N (= psi1(-N)),
/// -log Phi(-N) = N^2/2 + log sqrt(2 pi) + log m, so the sum collapses to
/// log(1/2) + log sqrt(2 pi) + log m - N s.
inline double truncated_bound_bracket(double level) {
  if (!(level > 0.0) || !std::isfinite(level)) throw DomainError("truncated_bound: N must be positive and finite");
  const double s = special::shifted_mills_lower(-level);
  const double m = level + s;
  return -std::numbers::ln2 + special::kLogSqrt2Pi + std::log(m) - level * s;
}

inline TruncatedBound truncated_bound(int n, double level) {
  if (n < 1) throw DomainError("truncated_bound: n must be at least 1");
  const double c = bound_weight() * truncated_bound_bracket(level);
  return {n, level, c / std::sqrt(static_cast<double>(n))};
}

/// Levels above this switch the integral to the x-variable form.
inline constexpr double kChangeOfVariablesLevel = 50.0;

/// (1/sqrt(n)) * integral over u in [psi1(-N), psi1(0)] of |psi1^{-1}(u)| phi(u):
/// the stage-one part of E|conditional MLE| restricted to |estimate| <= N/sqrt(n)
/// on the negative side.
inline double truncated_mae_quadrature(int n, double level, const QuadratureSpec& spec = {}) {
  if (n < 1) throw DomainError("truncated_mae_quadrature: n must be at least 1");
  if (!(level > 0.0) || !std::isfinite(level)) throw DomainError("truncated_mae_quadrature: N must be positive and finite");
  const auto psi1 = ScoreTransform::one();
  double value;
  if (level <= kChangeOfVariablesLevel) {
    auto integrand = [&](double u) { return std::fabs(score_invert(psi1, u)) * special::phi(u); };
    value = integrate_checked(integrand, score_eval(psi1, -level), score_eval(psi1, 0.0), spec,
                              "truncated_mae_quadrature");
  } else {
    // u = psi1(x): avoids inverting psi1 where it flattens out.
    auto integrand = [&](double x) {
      return std::fabs(x) * score_derivative(psi1, x) * special::phi(score_eval(psi1, x));
    };
    value = integrate_checked(integrand, -level, 0.0, spec, "truncated_mae_quadrature");
  }
  return value / std::sqrt(static_cast<double>(n));
}

/// Same integral, always in the x-variable form.
inline double truncated_mae_quadrature_x(int n, double level, const QuadratureSpec& spec = {}) {
  const auto psi1 = ScoreTransform::one();
  auto integrand = [&](double x) {
    return std::fabs(x) * score_derivative(psi1, x) * special::phi(score_eval(psi1, x));
  };
  return integrate_checked(integrand, -level, 0.0, spec, "truncated_mae_quadrature") /
         std::sqrt(static_cast<double>(n));
}

struct DivergenceRow {
  double level = 0.0;
  double bound = 0.0;
  double quadrature = 0.0;
};

/// Bound and quadrature value at each truncation level. Rows are computed
/// independently, so the result does not depend on `workers`.
inline std::vector<DivergenceRow> divergence_curve(int n, std::span<const double> levels, unsigned workers = 1,
                                                   const QuadratureSpec& spec = {}) {
  if (n < 1) throw DomainError("divergence_curve: n must be at least 1");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (!(levels[i] > 0.0)) throw DomainError("divergence_curve: levels must be positive");
    if (i > 0 && !(levels[i] > levels[i - 1])) throw DomainError("divergence_curve: levels must be strictly increasing");
  }
  std::vector<DivergenceRow> rows(levels.size());
  auto fill = [&](std::size_t i) {
    rows[i] = {levels[i], truncated_bound(n, levels[i]).value, truncated_mae_quadrature(n, levels[i], spec)};
  };
  if (workers <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) fill(i);
    return rows;
  }
  std::vector<std::future<void>> pending;
  for (std::size_t i = 0; i < rows.size(); ++i) pending.push_back(std::async(std::launch::async, fill, i));
  for (auto& f : pending) f.get();
  return rows;
}

/// Least-squares slope of the bound column against log N.
inline double fit_log_slope(std::span<const DivergenceRow> rows) {
  if (rows.size() < 2) throw DomainError("fit_log_slope: need at least two rows");
  double sx = 0.0, sy = 0.0;
  for (const auto& r : rows) {
    sx += std::log(r.level);
    sy += r.bound;
  }
  const double mx = sx / rows.size();
  const double my = sy / rows.size();
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : rows) {
    const double dx = std::log(r.level) - mx;
    sxy += dx * (r.bound - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

/// |int_a^b psi + int_{psi(a)}^{psi(b)} psi^{-1} - (b psi(b) - a psi(a))|,
/// zero for any continuous increasing psi.
inline double integral_identity_check(ScoreTransform t, double a, double b, const QuadratureSpec& spec = {}) {
  if (!(a < b)) throw DomainError("integral_identity_check: need a < b");
  const double forward = integrate_checked([t](double x) { return score_eval(t, x); }, a, b, spec,
                                           "integral_identity_check");
  const double fa = score_eval(t, a);
  const double fb = score_eval(t, b);
  const double inverse = integrate_checked([t](double u) { return score_invert(t, u); }, fa, fb, spec,
                                           "integral_identity_check");
  return std::fabs(forward + inverse - (b * fb - a * fa));
}

/// Closed form of int_{-N}^0 psi1 from the antiderivative x^2/2 + log Phi(x).
inline double psi1_integral_closed(double level) {
  return -std::numbers::ln2 - 0.5 * level * level - special::log_Phi(-level);
}

}  // namespace seqstop
