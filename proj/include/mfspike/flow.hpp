#pragma once

#include <utility>
#include <vector>

#include "mfspike/model.hpp"
#include "mfspike/ode.hpp"

namespace mfspike {

// Dense solution of the limit flow dx = F(x) dt on [0, T]. Interpolation is
// cubic Hermite on the accepted-step grid, with F supplying the slopes.
class FlowSolution {
 public:
  FlowSolution(OdeSolution sol, double horizon);

  double horizon() const { return horizon_; }
  double x0() const { return sol_.x0(); }
  double x_terminal() const { return sol_.x1(); }
  double eval(double t) const { return sol_.eval(t); }
  double deriv(double t) const { return sol_.deriv(t); }
  bool increasing() const { return x_terminal() >= x0(); }
  // Strictly monotone traversal (F of constant sign along the path).
  bool monotone() const { return monotone_; }
  const std::vector<OdePoint>& grid() const { return sol_.points; }

 private:
  OdeSolution sol_;
  double horizon_;
  bool monotone_;
};

// Adaptive solve with local relative error <= tol.
FlowSolution solve_limit_ode(const ModelSpec& model, double tol = 1e-9);

// Time t with x_t = y, bracketed root finding on the dense output.
// Throws std::domain_error when y lies outside the open interval ]x0, x_T[.
double invert_flow(const FlowSolution& sol, double y);

// Inverse flow gamma on the open traversal interval.
class InverseFlow {
 public:
  explicit InverseFlow(const FlowSolution& sol) : sol_(&sol) {}
  std::pair<double, double> domain() const;
  double operator()(double y) const { return invert_flow(*sol_, y); }

 private:
  const FlowSolution* sol_;
};

// All sign-change roots of F on the interval, polished to |F(root)| <= 1e-10
// and deduplicated within 1e-8.
std::vector<double> find_equilibria(const ModelSpec& model,
                                    std::pair<double, double> interval);

// Terminal values of the bracketing systems dl = (b(l) + w*l_bound) dt and
// dr = (b(r) + w*r_bound) dt, both started at x0.
std::pair<double, double> bracketing_flows(const ModelSpec& model,
                                           double l_bound, double r_bound,
                                           double horizon);

// True iff x_star lies strictly inside ]x0, x_T[ (1e-12 endpoint margin) and
// F keeps a fixed nonzero sign on the traversed stretch up to x_star.
bool check_assumption2(const FlowSolution& sol, double x_star);

}  // namespace mfspike
