// Standard normal special functions with stable tails.
//
// Every function here is pure. The lower tail below x = -30 is evaluated with
// the Laplace continued fraction for the Mills ratio, so that log Phi and the
// ratio phi/Phi stay exact far past the point where Phi itself underflows.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>

namespace seqstop::special {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;
inline constexpr double kTailSwitch = -30.0;
// Below this the shifted ratio x + phi/Phi loses digits to cancellation.
inline constexpr double kShiftedSwitch = -5.0;

namespace detail {

inline void require_finite(double x, const char* who) {
  if (!std::isfinite(x)) {
    throw std::domain_error(std::string(who) + ": argument must be finite");
  }
}

// Tails of the Laplace continued fraction for the upper Mills ratio
// R(t) = (1 - Phi(t)) / phi(t):
//   1/R(t) = E1,  Ek = t + k / E(k+1).
// Returns E2 and E3 (E1 = t + 1/E2). Only used for t >= 5, where 48 levels
// of backward recurrence are already exact to double precision.
struct LaplaceTail {
  double e2;
  double e3;
};

inline LaplaceTail laplace_tail(double t) {
  constexpr int kDepth = 48;
  double e = t;  // E(kDepth)
  for (int k = kDepth - 1; k >= 3; --k) e = t + k / e;
  const double e3 = e;
  return {t + 2.0 / e3, e3};
}

}  // namespace detail

/// Standard normal density.
inline double phi(double x) {
  detail::require_finite(x, "phi");
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

/// Standard normal distribution function, through erfc so that the lower
/// tail keeps full relative accuracy down to the underflow limit.
inline double Phi(double x) {
  detail::require_finite(x, "Phi");
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// log Phi(x), finite for every finite x.
inline double log_Phi(double x) {
  detail::require_finite(x, "log_Phi");
  if (x < kTailSwitch) {
    const double t = -x;
    const auto tail = detail::laplace_tail(t);
    // Phi(x) = phi(t) * R(t), 1/R(t) = t + 1/E2
    return -0.5 * t * t - kLogSqrt2Pi - std::log(t) - std::log1p(1.0 / (t * tail.e2));
  }
  if (x <= 0.0) return std::log(Phi(x));
  return std::log1p(-Phi(-x));
}

/// phi(x) / Phi(x). For x -> -inf this behaves like |x| + 1/|x|.
inline double mills_lower(double x) {
  detail::require_finite(x, "mills_lower");
  if (x < kTailSwitch) {
    const double t = -x;
    return t + 1.0 / detail::laplace_tail(t).e2;
  }
  return phi(x) / Phi(x);
}

/// phi(x) / (1 - Phi(x)); the reflection of mills_lower.
inline double mills_upper(double x) {
  detail::require_finite(x, "mills_upper");
  return mills_lower(-x);
}

/// x + phi(x)/Phi(x) without the cancellation that the naive sum suffers in
/// the lower tail (where the result is close to -1/x).
inline double shifted_mills_lower(double x) {
  detail::require_finite(x, "shifted_mills_lower");
  if (x < kShiftedSwitch) return 1.0 / detail::laplace_tail(-x).e2;
  return x + phi(x) / Phi(x);
}

/// Derivative of shifted_mills_lower, 1 - m(x) (x + m(x)) with m = mills_lower.
inline double shifted_mills_lower_derivative(double x) {
  detail::require_finite(x, "shifted_mills_lower_derivative");
  if (x < kShiftedSwitch) {
    // With G = E2, H = E3 and G = t + 2/H the expression reduces to
    // (2G - H) / (H G^2), which has no cancellation.
    const auto tail = detail::laplace_tail(-x);
    const double g = tail.e2;
    const double h = tail.e3;
    return (2.0 * g - h) / (h * g * g);
  }
  const double m = phi(x) / Phi(x);
  return 1.0 - m * (x + m);
}

namespace detail {

template <std::size_t N>
double horner(const std::array<double, N>& c, double x) {
  double acc = 0.0;
  for (std::size_t i = N; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

// Wichura, AS 241 (PPND16); coefficients in increasing powers.
inline constexpr std::array<double, 8> kCentralNum{
    3.387132872796366608,  133.14166789178437745, 1971.5909503065514427, 13731.693765509461125,
    45921.953931549871457, 67265.770927008700853, 33430.575583588128105, 2509.0809287301226727};
inline constexpr std::array<double, 8> kCentralDen{
    1.0,                   42.313330701600911252, 687.1870074920579083,  5394.1960214247511077,
    21213.794301586595867, 39307.89580009271061,  28729.085735721942674, 5226.495278852545925};
inline constexpr std::array<double, 8> kNearNum{
    1.42343711074968357734, 4.6303378461565452959,  5.7694972214606914055,   3.64784832476320460504,
    1.27045825245236838258, 0.24178072517745061177, 0.0227238449892691845833, 7.7454501427834140764e-4};
inline constexpr std::array<double, 8> kNearDen{
    1.0,                      2.05319162663775882187,  1.6763848301838038494,  0.68976733498510000455,
    0.14810397642748007459,   0.0151986665636164571966, 5.475938084995344946e-4, 1.05075007164441684324e-9};
inline constexpr std::array<double, 8> kFarNum{
    6.6579046435011037772,    5.4637849111641143699,     1.7848265399172913358,   0.29656057182850489123,
    0.026532189526576123093,  0.0012426609473880784386,  2.71155556874348757815e-5, 2.01033439929228813265e-7};
inline constexpr std::array<double, 8> kFarDen{
    1.0,                      0.59983220655588793769,   0.13692988092273580531,  0.0148753612908506148525,
    7.868691311456132591e-4,  1.8463183175100546818e-5, 1.4215117583164458887e-7, 2.04426310338993978564e-15};

}  // namespace detail

/// Inverse of Phi for p in (0, 1). Wichura's AS 241, relative accuracy
/// about 1e-16.
inline double Phi_inverse(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("Phi_inverse: probability must lie in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * detail::horner(detail::kCentralNum, r) / detail::horner(detail::kCentralDen, r);
  }
  double r = std::sqrt(-std::log(q < 0.0 ? p : 1.0 - p));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = detail::horner(detail::kNearNum, r) / detail::horner(detail::kNearDen, r);
  } else {
    r -= 5.0;
    value = detail::horner(detail::kFarNum, r) / detail::horner(detail::kFarDen, r);
  }
  return q < 0.0 ? -value : value;
}

}  // namespace seqstop::special
