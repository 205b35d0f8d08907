// Globally adaptive Gauss-Kronrod (7/15) quadrature: the panel with the
// largest error estimate is bisected until the summed estimate meets the
// tolerance. Panels whose estimate is already at rounding level are left
// alone, so noisy-but-converged integrands terminate.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "seqstop/errors.hpp"

namespace seqstop {

struct QuadratureSpec {
  double abs_tol = 1e-10;
  int max_depth = 60;
  int max_panels = 20'000;
  // Half-width, in units of the scale, used when an integral over the real
  // line is truncated. At 12 the normal weight is below 1e-31.
  double cutoff = 12.0;

  void validate() const {
    if (!(abs_tol > 0.0)) throw DomainError("QuadratureSpec: abs_tol must be positive");
    if (max_depth < 1) throw DomainError("QuadratureSpec: max_depth must be at least 1");
    if (max_panels < 1) throw DomainError("QuadratureSpec: max_panels must be at least 1");
    if (!(cutoff >= 8.0)) throw DomainError("QuadratureSpec: cutoff must be at least 8");
  }
};

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
  long evaluations = 0;
  bool converged = true;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the Kronrod nodes 1, 3, 5 and the centre.
inline constexpr std::array<double, 4> kGaussWeights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double kronrod;
  double gauss;
};

template <class F>
Panel gauss_kronrod(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = kKronrodWeights[7] * fc;
  double gauss = kGaussWeights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double sum = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  return {kronrod * half, gauss * half};
}

struct Piece {
  double a, b;
  Panel p;
  double err;
  int depth;
  bool operator<(const Piece& o) const { return err < o.err; }
};

inline double roundoff(const Panel& p) { return 50.0 * std::numeric_limits<double>::epsilon() * std::fabs(p.kronrod); }

template <class F>
void adapt(F& f, double a, double b, const QuadratureSpec& spec, QuadratureResult& out) {
  auto make = [&](double lo, double hi, int depth) {
    const Panel p = gauss_kronrod(f, lo, hi);
    out.evaluations += 15;
    const double err = std::fabs(p.kronrod - p.gauss);
    return Piece{lo, hi, p, std::isfinite(err) ? err : std::numeric_limits<double>::infinity(), depth};
  };
  std::priority_queue<Piece> active;
  std::vector<Piece> done;
  double total_err = 0.0;
  auto push = [&](Piece q) {
    total_err += q.err;
    const bool settled = q.err <= roundoff(q.p) || q.depth >= spec.max_depth || !std::isfinite(q.err);
    if (settled) done.push_back(q); else active.push(q);
  };
  push(make(a, b, 0));
  int panels = 1;
  while (!active.empty() && total_err > spec.abs_tol && panels < spec.max_panels) {
    const Piece q = active.top();
    active.pop();
    total_err -= q.err;
    const double mid = 0.5 * (q.a + q.b);
    if (!(mid > q.a && mid < q.b)) {
      total_err += q.err;
      done.push_back(q);
      continue;
    }
    push(make(q.a, mid, q.depth + 1));
    push(make(mid, q.b, q.depth + 1));
    ++panels;
  }
  for (; !active.empty(); active.pop()) done.push_back(active.top());
  // Sum in position order so the result does not depend on heap layout.
  std::sort(done.begin(), done.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
  double floor = 0.0;
  for (const auto& q : done) {
    out.value += q.p.kronrod;
    out.abs_error += q.err;
    floor += roundoff(q.p);
  }
  out.converged = std::isfinite(out.abs_error) && out.abs_error <= std::max(spec.abs_tol, floor);
}

}  // namespace detail

/// Integral of f over [a, b]. Reversed limits give the negated integral.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureSpec& spec = {}) {
  spec.validate();
  QuadratureResult out;
  if (a == b) return out;
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("integrate: limits must be finite; truncate with QuadratureSpec::cutoff");
  }
  if (b < a) {
    out = integrate(f, b, a, spec);
    out.value = -out.value;
    return out;
  }
  detail::adapt(f, a, b, spec, out);
  return out;
}

/// Integral of f over the real line, truncated to centre +- cutoff * scale.
template <class F>
QuadratureResult integrate_line(F&& f, double centre, double scale, const QuadratureSpec& spec = {}) {
  // Split at the centre so the peak sits on a panel boundary.
  const double w = spec.cutoff * scale;
  auto left = integrate(f, centre - w, centre, spec);
  const auto right = integrate(f, centre, centre + w, spec);
  left.value += right.value;
  left.abs_error += right.abs_error;
  left.evaluations += right.evaluations;
  left.converged = left.converged && right.converged;
  return left;
}

/// integrate() that throws NumericError when the tolerance was not met.
template <class F>
double integrate_checked(F&& f, double a, double b, const QuadratureSpec& spec, const char* what) {
  const auto r = integrate(f, a, b, spec);
  if (!r.converged) {
    throw NumericError(std::string(what) + ": quadrature did not converge (error estimate " +
                       std::to_string(r.abs_error) + ")");
  }
  return r.value;
}

}  // namespace seqstop
