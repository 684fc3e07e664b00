#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "mfspike/flow.hpp"
#include "mfspike/model.hpp"

using namespace mfspike;

namespace {

ModelSpec pure_decay() {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::zero();
  m.weights = WeightLaw::point(1.0);
  m.n = 1;
  m.x0 = 1.0;
  m.horizon = 1.0;
  return m;
}

ModelSpec bounded_system(double x0 = -1.0, double horizon = 10.0) {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::two_minus_gauss();
  m.weights = WeightLaw::uniform(-2.0, 3.0);
  m.n = 100;
  m.x0 = x0;
  m.horizon = horizon;
  return m;
}

ModelSpec log1p_system(double b, double x0) {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::log1p_rate();
  m.weights = WeightLaw::uniform(0.0, b);
  m.n = 100;
  m.x0 = x0;
  m.horizon = 10.0;
  return m;
}

}  // namespace

TEST_CASE("limit flow solves the ODE") {
  SUBCASE("linear decay closed form") {
    const FlowSolution sol = solve_limit_ode(pure_decay(), 1e-9);
    CHECK(sol.x_terminal() ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-7));
  }

  SUBCASE("equilibrium start stays put") {
    ModelSpec m = pure_decay();
    m.x0 = 0.0;
    m.horizon = 5.0;
    const FlowSolution sol = solve_limit_ode(m);
    for (int i = 0; i <= 20; ++i)
      CHECK(std::abs(sol.eval(0.25 * i)) < 1e-12);
  }

  SUBCASE("bounded system approaches its equilibrium") {
    const FlowSolution sol = solve_limit_ode(bounded_system());
    // Independent high-precision integration gives x(10) = 0.68538226;
    // the flow is still ~3.6e-3 short of the equilibrium 0.6889 at T = 10.
    CHECK(sol.x_terminal() ==
          doctest::Approx(0.6853822580929639).epsilon(1e-7));
    CHECK(std::abs(sol.x_terminal() - 0.6889) < 5e-3);
  }

  SUBCASE("dense output residual") {
    const FlowSolution sol = solve_limit_ode(bounded_system());
    const ModelSpec m = bounded_system();
    const auto& grid = sol.grid();
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
      const double tm = 0.5 * (grid[i].t + grid[i + 1].t);
      const double f = m.big_f(sol.eval(tm));
      CHECK(std::abs(sol.deriv(tm) - f) <= 1e-7 * (1.0 + std::abs(f)));
    }
  }

  SUBCASE("semigroup property") {
    const ModelSpec m = bounded_system();
    const FlowSolution whole = solve_limit_ode(m);
    ModelSpec first = m;
    first.horizon = 3.0;
    const FlowSolution part1 = solve_limit_ode(first);
    ModelSpec second = m;
    second.x0 = part1.x_terminal();
    second.horizon = 7.0;
    const FlowSolution part2 = solve_limit_ode(second);
    CHECK(part2.x_terminal() ==
          doctest::Approx(whole.x_terminal()).epsilon(1e-7));
  }

  SUBCASE("step-size underflow reports the failing time") {
    ModelSpec m = pure_decay();
    m.drift = DriftSpec::custom([](double x) { return 1.0 + x * x; }, 10.0);
    m.x0 = 0.0;
    m.horizon = 2.0;  // finite-time blow-up at pi/2
    CHECK_THROWS_AS(solve_limit_ode(m), std::runtime_error);
  }
}

TEST_CASE("inverse flow") {
  SUBCASE("closed form") {
    const FlowSolution sol = solve_limit_ode(pure_decay());
    // Time accuracy is limited by the dense-output state error over |F|.
    CHECK(invert_flow(sol, 0.5) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-7));
    CHECK(std::abs(sol.eval(invert_flow(sol, 0.5)) - 0.5) < 1e-8);
  }

  SUBCASE("round trips") {
    const FlowSolution sol = solve_limit_ode(bounded_system());
    const double mid = sol.x0() + 0.5 * (sol.x_terminal() - sol.x0());
    const double t = invert_flow(sol, mid);
    CHECK(std::abs(sol.eval(t) - mid) < 1e-8);
    for (double y : {-0.9, -0.5, 0.0, 0.3, 0.6}) {
      CHECK(std::abs(sol.eval(invert_flow(sol, y)) - y) < 1e-8);
    }
    // gamma o flow = identity on times
    for (double tt : {0.5, 2.0, 5.0}) {
      CHECK(invert_flow(sol, sol.eval(tt)) == doctest::Approx(tt).epsilon(1e-8));
    }
  }

  SUBCASE("zero crossing of the bounded system") {
    const FlowSolution sol = solve_limit_ode(bounded_system());
    const double t0 = invert_flow(sol, 0.0);
    CHECK(t0 > 0.0);
    CHECK(t0 == doctest::Approx(1.0165264945981418).epsilon(1e-6));
    CHECK(std::abs(sol.eval(t0)) < 1e-8);
  }

  SUBCASE("outside the traversal interval") {
    const FlowSolution sol = solve_limit_ode(bounded_system());
    CHECK_THROWS_AS(invert_flow(sol, -1.0), std::domain_error);
    CHECK_THROWS_AS(invert_flow(sol, 0.9), std::domain_error);
    const InverseFlow gamma(sol);
    CHECK(gamma.domain().first == doctest::Approx(-1.0));
  }
}

TEST_CASE("equilibria") {
  SUBCASE("bounded system has a single root near 0.6889") {
    const std::vector<double> roots =
        find_equilibria(bounded_system(), {-5.0, 5.0});
    REQUIRE(roots.size() == 1);
    CHECK(std::abs(roots[0] - 0.6889) < 1e-3);
    CHECK(std::abs(evaluate_big_f(bounded_system(), roots[0])) <= 1e-10);
  }

  SUBCASE("metastable log1p system has roots 0 and 2.5129") {
    const ModelSpec m = log1p_system(4.0, 0.1);
    const std::vector<double> roots = find_equilibria(m, {-0.5, 5.0});
    REQUIRE(roots.size() == 2);
    CHECK(std::abs(roots[0]) < 1e-3);
    CHECK(std::abs(roots[1] - 2.5129) < 1e-3);
  }

  SUBCASE("pure decay has the origin") {
    const std::vector<double> roots =
        find_equilibria(pure_decay(), {-2.0, 2.0});
    REQUIRE(roots.size() == 1);
    CHECK(std::abs(roots[0]) < 1e-10);
  }

  SUBCASE("re-solving from a root stays put") {
    for (double root : find_equilibria(bounded_system(), {-5.0, 5.0})) {
      ModelSpec m = bounded_system();
      m.x0 = root;
      const FlowSolution sol = solve_limit_ode(m);
      for (const auto& p : sol.grid()) CHECK(std::abs(p.x - root) < 1e-6);
    }
  }
}

TEST_CASE("bracketing flows") {
  SUBCASE("constant rate collapses the bracket") {
    ModelSpec m = bounded_system();
    m.rate = RateSpec::constant(1.5);
    const FlowSolution sol = solve_limit_ode(m);
    const auto [lt, rt] = bracketing_flows(m, 1.5, 1.5, m.horizon);
    CHECK(lt == doctest::Approx(rt).epsilon(1e-10));
    CHECK(lt == doctest::Approx(sol.x_terminal()).epsilon(1e-7));
  }

  SUBCASE("bounded system is bracketed by its rate range") {
    const ModelSpec m = bounded_system();
    for (double horizon : {1.0, 2.0, 5.0, 10.0}) {
      ModelSpec mh = m;
      mh.horizon = horizon;
      const FlowSolution sol = solve_limit_ode(mh);
      const auto [lt, rt] = bracketing_flows(mh, 1.0, 2.0, horizon);
      CHECK(lt <= sol.x_terminal() + 1e-9);
      CHECK(sol.x_terminal() <= rt + 1e-9);
    }
    const auto [lt, rt] = bracketing_flows(m, 1.0, 2.0, 10.0);
    CHECK(lt <= 0.6889);
    CHECK(0.6889 <= rt);
  }

  SUBCASE("zero lower rate gives the pure decay") {
    ModelSpec m = bounded_system();
    const auto [lt, rt] = bracketing_flows(m, 0.0, 2.0, 4.0);
    CHECK(lt == doctest::Approx(m.x0 * std::exp(-4.0)).epsilon(1e-9));
    CHECK(rt >= lt);
  }
}

TEST_CASE("interior estimation points") {
  const FlowSolution sol = solve_limit_ode(bounded_system());
  CHECK(check_assumption2(sol, 0.2));
  CHECK_FALSE(check_assumption2(sol, -1.0));       // boundary excluded
  CHECK_FALSE(check_assumption2(sol, 0.9));        // beyond the equilibrium
  CHECK_FALSE(check_assumption2(sol, sol.x0() + 1e-13));
}
