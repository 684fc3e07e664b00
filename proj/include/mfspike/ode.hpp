#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfspike {

struct OdeOptions {
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double h_max = std::numeric_limits<double>::infinity();
  double h_init = 0.0;  // 0 -> automatic
  std::uint64_t max_steps = 20'000'000;
};

struct OdePoint {
  double t;
  double x;
  double dx;
};

// Accepted-step grid of a scalar IVP plus cubic-Hermite dense output.
struct OdeSolution {
  std::vector<OdePoint> points;
  bool ok = false;
  std::string error;
  double fail_time = 0.0;

  double t0() const { return points.front().t; }
  double t1() const { return points.back().t; }
  double x0() const { return points.front().x; }
  double x1() const { return points.back().x; }

  // Hermite interpolation between accepted steps.
  double eval(double t) const { return interp(t).first; }
  double deriv(double t) const { return interp(t).second; }

 private:
  std::pair<double, double> interp(double t) const {
    const auto& p = points;
    if (t <= p.front().t) return {p.front().x, p.front().dx};
    if (t >= p.back().t) return {p.back().x, p.back().dx};
    std::size_t lo = 0, hi = p.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (p[mid].t <= t)
        lo = mid;
      else
        hi = mid;
    }
    const double h = p[hi].t - p[lo].t;
    if (h <= 0.0) return {p[lo].x, p[lo].dx};
    const double s = (t - p[lo].t) / h;
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1;
    const double h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2;
    const double h11 = s3 - s2;
    const double x = h00 * p[lo].x + h10 * h * p[lo].dx + h01 * p[hi].x +
                     h11 * h * p[hi].dx;
    const double d00 = (6 * s2 - 6 * s) / h;
    const double d10 = 3 * s2 - 4 * s + 1;
    const double d01 = (-6 * s2 + 6 * s) / h;
    const double d11 = 3 * s2 - 2 * s;
    const double dx = d00 * p[lo].x + d10 * p[lo].dx + d01 * p[hi].x +
                      d11 * p[hi].dx;
    return {x, dx};
  }
};

// Adaptive Dormand-Prince 5(4) for a scalar autonomous-or-not IVP
// dx/dt = f(t, x), x(t0) = x0, integrated to t1 (t1 > t0).
template <class F>
OdeSolution integrate_ode(F&& f, double t0, double t1, double x0,
                          OdeOptions opts = {}) {
  OdeSolution sol;
  double t = t0;
  double x = x0;
  double k1 = f(t, x);
  sol.points.push_back({t, x, k1});
  if (t1 <= t0) {
    sol.ok = (t1 == t0);
    if (!sol.ok) sol.error = "integrate_ode: t1 < t0";
    return sol;
  }

  const double span = t1 - t0;
  double h = opts.h_init > 0 ? opts.h_init : span / 100.0;
  h = std::min({h, opts.h_max, span});

  // Dormand-Prince coefficients.
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                   a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                   a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                   b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 35.0 / 384 - 5179.0 / 57600;
  constexpr double e3 = 500.0 / 1113 - 7571.0 / 16695;
  constexpr double e4 = 125.0 / 192 - 393.0 / 640;
  constexpr double e5 = -2187.0 / 6784 + 92097.0 / 339200;
  constexpr double e6 = 11.0 / 84 - 187.0 / 2100;
  constexpr double e7 = -1.0 / 40;

  for (std::uint64_t step = 0; step < opts.max_steps; ++step) {
    if (t >= t1) {
      sol.ok = true;
      return sol;
    }
    h = std::min(h, t1 - t);
    if (h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
      sol.error = "integrate_ode: step size underflow";
      sol.fail_time = t;
      return sol;
    }
    const double k2 = f(t + h * a21, x + h * (a21 * k1));
    const double k3 = f(t + h * 0.3, x + h * (a31 * k1 + a32 * k2));
    const double k4 = f(t + h * 0.8, x + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = f(t + h * (8.0 / 9),
                        x + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double k6 =
        f(t + h, x + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const double x_new =
        x + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const double k7 = f(t + h, x_new);
    const double err_raw =
        h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale =
        opts.abs_tol + opts.rel_tol * std::max(std::abs(x), std::abs(x_new));
    const double err = std::abs(err_raw) / scale;

    if (!std::isfinite(x_new) || !std::isfinite(err_raw)) {
      h *= 0.25;
      continue;
    }
    if (err <= 1.0) {
      t += h;
      x = x_new;
      k1 = k7;  // FSAL
      sol.points.push_back({t, x, k1});
      const double grow = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h = std::min({h * std::clamp(grow, 0.2, 5.0), opts.h_max});
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
  }
  sol.error = "integrate_ode: step budget exhausted";
  sol.fail_time = t;
  return sol;
}

// Terminal value only.
template <class F>
double integrate_ode_final(F&& f, double t0, double t1, double x0,
                           OdeOptions opts = {}) {
  OdeSolution s = integrate_ode(f, t0, t1, x0, opts);
  if (!s.ok) throw std::runtime_error(s.error);
  return s.x1();
}

}  // namespace mfspike
