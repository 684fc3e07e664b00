#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>

namespace mfspike {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

// Gauss-Kronrod 15(7) nodes and weights on [-1, 1] (positive half).
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr double kGk15Weights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

// 7-point Gauss weights matching nodes 1, 3, 5, 7 above.
inline constexpr double kG7Weights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

}  // namespace detail

// One Gauss-Kronrod 15(7) panel on [a, b].
template <class F>
QuadratureResult gk15(F&& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = detail::kGk15Weights[7] * fc;
  double gauss = detail::kG7Weights[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double dx = half * detail::kGk15Nodes[i];
    const double fsum = f(c - dx) + f(c + dx);
    kronrod += detail::kGk15Weights[i] * fsum;
    if (i % 2 == 1) gauss += detail::kG7Weights[i / 2] * fsum;
  }
  QuadratureResult r;
  r.value = kronrod * half;
  r.error = std::abs((kronrod - gauss) * half);
  return r;
}

// Adaptive bisection on top of gk15 until the local error estimate meets
// max(abs_tol, rel_tol * |integral|). Depth-limited; throws only on NaN.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10,
                 double abs_tol = 0.0, int max_depth = 48) {
  if (a == b) return 0.0;
  struct Worker {
    const F& fn;
    double span;
    double rel, abs;
    double total_hint;
    double run(double lo, double hi, const QuadratureResult& whole, int depth) {
      // Error budget scales with panel length so panel errors sum below tol.
      const double budget =
          std::max(abs, rel * std::abs(total_hint)) * (hi - lo) / span;
      if (whole.error <= budget || depth <= 0) {
        if (std::isnan(whole.value))
          throw std::runtime_error("quadrature: integrand returned NaN");
        return whole.value;
      }
      const double mid = 0.5 * (lo + hi);
      const QuadratureResult left = gk15(fn, lo, mid);
      const QuadratureResult right = gk15(fn, mid, hi);
      return run(lo, mid, left, depth - 1) + run(mid, hi, right, depth - 1);
    }
  };
  const QuadratureResult whole = gk15(f, a, b);
  const double hint =
      std::max(std::abs(whole.value), whole.error);
  Worker w{f, b - a, rel_tol, std::max(abs_tol, 1e-300), hint};
  return w.run(a, b, whole, max_depth);
}

}  // namespace mfspike
