#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace psqkd::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;  // accumulated local error estimates
  bool converged = true;
  std::int64_t evals = 0;
};

namespace detail {

inline double simpson(double a, double fa, double fm, double b, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
void adapt(F& f, double a, double fa, double m, double fm, double b, double fb,
           double whole, double tol, int depth, int force, Result& out) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  out.evals += 2;
  const double left = simpson(a, fa, flm, m, fm);
  const double right = simpson(m, fm, frm, b, fb);
  const double delta = left + right - whole;
  if ((force <= 0 && std::abs(delta) <= 15.0 * tol) || depth <= 0) {
    if (depth <= 0 && std::abs(delta) > 15.0 * tol) out.converged = false;
    out.value += left + right + delta / 15.0;
    out.error += std::abs(delta) / 15.0;
    return;
  }
  adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, force - 1, out);
  adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, force - 1, out);
}

}  // namespace detail

// Adaptive Simpson on [a, b] to absolute tolerance tol.  The first
// `min_depth` levels subdivide unconditionally: the error test compares two
// coarse estimates, and on wide domains both can agree while straddling a
// feature narrower than the sample spacing.  Forcing the early splits puts
// nodes at spacing (b-a)/2^min_depth before any acceptance is allowed.
template <class F>
Result adaptive_simpson(F&& f, double a, double b, double tol,
                        int max_depth = 40, int min_depth = 0) {
  Result out;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fm = f(m);
  const double fb = f(b);
  out.evals = 3;
  const double whole = detail::simpson(a, fa, fm, b, fb);
  detail::adapt(f, a, fa, m, fm, b, fb, whole, tol, max_depth, min_depth, out);
  return out;
}

// Nested adaptive Simpson over the rectangle [ax,bx] x [ay,by]: the outer
// rule integrates x -> (inner integral over y).  The inner tolerance is
// scaled so the inner error, accumulated across the outer extent, stays an
// order of magnitude below the outer budget.  min_depth applies per axis;
// the default pins the base grid at 1/64 of each extent, fine enough that a
// localized peak cannot slip between the acceptance-test nodes (a missed
// peak makes the outer integrand discontinuous in x, which the outer
// refinement then chases to max_depth without ever converging).
template <class F>
Result adaptive_simpson_2d(F&& f, double ax, double bx, double ay, double by,
                           double tol, int max_depth = 30, int min_depth = 6) {
  Result total;
  const double inner_tol = 0.1 * tol / (bx - ax);
  auto outer = [&](double x) {
    Result inner = adaptive_simpson([&](double y) { return f(x, y); }, ay, by,
                                    inner_tol, max_depth, min_depth);
    total.evals += inner.evals;
    if (!inner.converged) total.converged = false;
    return inner.value;
  };
  Result o = adaptive_simpson(outer, ax, bx, tol, max_depth, min_depth);
  total.value = o.value;
  total.error = o.error;
  if (!o.converged) total.converged = false;
  return total;
}

}  // namespace psqkd::quadrature
