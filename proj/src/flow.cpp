#include "mfspike/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfspike {

FlowSolution::FlowSolution(OdeSolution sol, double horizon)
    : sol_(std::move(sol)), horizon_(horizon) {
  monotone_ = true;
  const auto& pts = sol_.points;
  if (pts.size() > 1) {
    const bool up = pts.back().x >= pts.front().x;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (up ? pts[i].x < pts[i - 1].x : pts[i].x > pts[i - 1].x) {
        monotone_ = false;
        break;
      }
    }
  }
}

FlowSolution solve_limit_ode(const ModelSpec& model, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_limit_ode: tol must be > 0");
  auto rhs = [&model](double, double x) { return model.big_f(x); };
  OdeOptions opts;
  opts.rel_tol = tol;
  opts.abs_tol = tol * 1e-3;
  opts.h_max = std::min(model.horizon / 16.0, 0.25);
  for (int attempt = 0; attempt < 4; ++attempt) {
    OdeSolution sol = integrate_ode(rhs, 0.0, model.horizon, model.x0, opts);
    if (!sol.ok)
      throw std::runtime_error(sol.error + " at t = " +
                               std::to_string(sol.fail_time));
    // The dense output must satisfy the ODE at panel midpoints.
    bool good = true;
    for (std::size_t i = 0; i + 1 < sol.points.size() && good; ++i) {
      const double tm = 0.5 * (sol.points[i].t + sol.points[i + 1].t);
      const double residual =
          std::abs(sol.deriv(tm) - model.big_f(sol.eval(tm)));
      if (residual > 1e-7 * (1.0 + std::abs(model.big_f(sol.eval(tm)))))
        good = false;
    }
    if (good) return FlowSolution(std::move(sol), model.horizon);
    opts.rel_tol *= 0.01;
    opts.abs_tol *= 0.01;
    opts.h_max *= 0.5;
  }
  throw std::runtime_error("solve_limit_ode: dense output failed residual check");
}

double invert_flow(const FlowSolution& sol, double y) {
  const double lo = std::min(sol.x0(), sol.x_terminal());
  const double hi = std::max(sol.x0(), sol.x_terminal());
  if (!(y > lo && y < hi))
    throw std::domain_error("invert_flow: value outside ]x0, x_T[");
  if (!sol.monotone())
    throw std::domain_error("invert_flow: flow is not monotone");

  const auto& pts = sol.grid();
  const bool up = sol.increasing();
  // Locate the bracketing grid panel by state value.
  std::size_t a = 0, b = pts.size() - 1;
  while (b - a > 1) {
    const std::size_t mid = (a + b) / 2;
    const bool before = up ? (pts[mid].x <= y) : (pts[mid].x >= y);
    if (before)
      a = mid;
    else
      b = mid;
  }
  double ta = pts[a].t, tb = pts[b].t;
  for (int it = 0; it < 200; ++it) {
    const double tm = 0.5 * (ta + tb);
    const double xm = sol.eval(tm);
    if ((xm < y) == up)
      ta = tm;
    else
      tb = tm;
    if (tb - ta < 1e-15 * std::max(1.0, std::abs(tb))) break;
  }
  return 0.5 * (ta + tb);
}

std::pair<double, double> InverseFlow::domain() const {
  return {std::min(sol_->x0(), sol_->x_terminal()),
          std::max(sol_->x0(), sol_->x_terminal())};
}

std::vector<double> find_equilibria(const ModelSpec& model,
                                    std::pair<double, double> interval) {
  const double lo = std::min(interval.first, interval.second);
  const double hi = std::max(interval.first, interval.second);
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw std::invalid_argument("find_equilibria: interval must be finite");
  auto big_f = [&model](double x) { return model.big_f(x); };

  std::vector<double> roots;
  auto push_root = [&roots](double r) {
    for (double existing : roots)
      if (std::abs(existing - r) <= 1e-8) return;
    roots.push_back(r);
  };

  const double step = 1e-3;
  double x_prev = lo;
  double f_prev = big_f(x_prev);
  if (f_prev == 0.0) push_root(x_prev);
  const auto n = static_cast<std::size_t>((hi - lo) / step) + 1;
  for (std::size_t i = 1; i <= n; ++i) {
    const double x = std::min(lo + static_cast<double>(i) * step, hi);
    if (x <= x_prev) break;
    const double fx = big_f(x);
    if (fx == 0.0) {
      push_root(x);
    } else if (f_prev != 0.0 && std::signbit(fx) != std::signbit(f_prev)) {
      double a = x_prev, b = x, fa = f_prev;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = big_f(m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if (std::signbit(fm) == std::signbit(fa)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
        if (b - a < 1e-15 * std::max(1.0, std::abs(b))) break;
      }
      const double root = 0.5 * (a + b);
      if (std::abs(big_f(root)) <= 1e-10) push_root(root);
    }
    x_prev = x;
    f_prev = fx;
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::pair<double, double> bracketing_flows(const ModelSpec& model,
                                           double l_bound, double r_bound,
                                           double horizon) {
  const double w = model.weights.mean();
  OdeOptions opts;
  opts.rel_tol = 1e-10;
  opts.abs_tol = 1e-13;
  const double l_t = integrate_ode_final(
      [&](double, double x) { return model.drift.b(x) + w * l_bound; }, 0.0,
      horizon, model.x0, opts);
  const double r_t = integrate_ode_final(
      [&](double, double x) { return model.drift.b(x) + w * r_bound; }, 0.0,
      horizon, model.x0, opts);
  return {l_t, r_t};
}

bool check_assumption2(const FlowSolution& sol, double x_star) {
  const double lo = std::min(sol.x0(), sol.x_terminal());
  const double hi = std::max(sol.x0(), sol.x_terminal());
  if (!(x_star - lo > 1e-12 && hi - x_star > 1e-12)) return false;
  if (!sol.monotone()) return false;
  // F must keep a fixed nonzero sign on the stretch from x0 to x_star.
  double t_star;
  try {
    t_star = invert_flow(sol, x_star);
  } catch (const std::domain_error&) {
    return false;
  }
  const bool up = sol.increasing();
  for (const auto& p : sol.grid()) {
    if (p.t > t_star) break;
    if (up ? p.dx <= 0.0 : p.dx >= 0.0) return false;
  }
  return true;
}

}  // namespace mfspike
