#include <cmath>
#include <stdexcept>
#include <random>

#include "doctest.h"
#include "mfspike/model.hpp"
#include "mfspike/rng.hpp"
#include "support/oracles.hpp"

using namespace mfspike;

namespace {

ModelSpec bounded_model(double w_mean = 0.5) {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::two_minus_gauss();
  m.weights = WeightLaw::uniform(w_mean - 2.5, w_mean + 2.5);
  m.n = 100;
  m.x0 = -1.0;
  m.horizon = 10.0;
  return m;
}

ModelSpec log1p_model(double a, double b, double x0) {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::log1p_rate();
  m.weights = WeightLaw::uniform(a, b);
  m.n = 100;
  m.x0 = x0;
  m.horizon = 10.0;
  return m;
}

}  // namespace

TEST_CASE("F = b + w f") {
  const ModelSpec m = bounded_model();
  CHECK(evaluate_big_f(m, 0.0) == doctest::Approx(0.5).epsilon(1e-14));

  ModelSpec zero = m;
  zero.rate = RateSpec::zero();
  CHECK(evaluate_big_f(zero, 0.0) == 0.0);  // f(0) = 0 and b(0) = 0

  const ModelSpec meta = log1p_model(0.0, 4.0, 0.1);
  CHECK(std::abs(evaluate_big_f(meta, 2.5129)) < 5e-4);
}

TEST_CASE("F is linear in the mean synaptic weight") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> xs(-2.0, 2.0);
  std::uniform_real_distribution<double> ws(0.1, 3.0);
  for (int k = 0; k < 25; ++k) {
    const double w = ws(rng);
    const double x = xs(rng);
    ModelSpec m1 = bounded_model();
    m1.weights = WeightLaw::point(w);
    ModelSpec m2 = bounded_model();
    m2.weights = WeightLaw::point(2.0 * w);
    const double diff = evaluate_big_f(m2, x) - evaluate_big_f(m1, x);
    CHECK(diff == doctest::Approx(w * m1.rate.f(x)).epsilon(1e-12));
  }
}

TEST_CASE("weight laws") {
  const WeightLaw u = WeightLaw::uniform(-2.0, 3.0);
  CHECK(u.mean() == 0.5);

  SUBCASE("empirical mean within 4 standard errors") {
    std::mt19937_64 rng(12);
    double acc = 0.0;
    const int draws = 1'000'000;
    for (int i = 0; i < draws; ++i) acc += u.sample(rng);
    const double se = std::sqrt(25.0 / 12.0 / draws);
    CHECK(std::abs(acc / draws - 0.5) < 4.0 * se);
  }

  SUBCASE("absolute moments against quadrature") {
    for (double p : {1.0, 2.0, 3.0}) {
      const double expected = oracle::simpson(
          [p](double v) { return std::pow(std::abs(v), p) / 5.0; }, -2.0, 3.0,
          20000);
      CHECK(u.abs_moment(p) == doctest::Approx(expected).epsilon(1e-8));
    }
  }

  SUBCASE("point mass") {
    const WeightLaw p = WeightLaw::point(-1.5);
    CHECK(p.mean() == -1.5);
    CHECK(p.abs_moment(2) == doctest::Approx(2.25));
    std::mt19937_64 rng(1);
    CHECK(p.sample(rng) == -1.5);
  }

  SUBCASE("mass at zero rejected") {
    CHECK_THROWS_AS(WeightLaw::point(0.0), std::invalid_argument);
    CHECK_THROWS_AS(WeightLaw::uniform(1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("kernel construction") {
  SUBCASE("rectangular") {
    const KernelSpec k = build_kernel(KernelShape::rectangular);
    CHECK(oracle::simpson([&](double u) { return k(u); }, -1.0, 1.0, 2000) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(oracle::simpson([&](double u) { return u * k(u); }, -1.0, 1.0,
                          2000) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(kernel_l2_norm(k) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(k(1.2) == 0.0);
    CHECK(k(-3.0) == 0.0);
  }

  SUBCASE("higher-order(3) vanishing moments") {
    const KernelSpec k = build_kernel(KernelShape::higher_order, 3);
    for (int j = 1; j <= 3; ++j) {
      const double mj = oracle::simpson(
          [&](double u) { return std::pow(u, j) * k(u); }, -1.0, 1.0, 4000);
      CHECK(std::abs(mj) < 1e-10);
    }
    CHECK(oracle::simpson([&](double u) { return k(u); }, -1.0, 1.0, 4000) ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK_FALSE(k.nonnegative);
    // L2 norm against an independent fine-grid Riemann sum.
    const double riem = oracle::riemann(
        [&](double u) { return k(u) * k(u); }, -1.0, 1.0, 1e-6);
    CHECK(kernel_l2_norm(k) == doctest::Approx(riem).epsilon(1e-6));
  }

  SUBCASE("smooth bump") {
    const KernelSpec k = build_kernel(KernelShape::smooth_bump);
    CHECK(oracle::simpson([&](double u) { return k(u); }, -1.0, 1.0, 4000) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(k(1.0) == 0.0);
    CHECK(k.lipschitz);
    CHECK(k.nonnegative);
  }

  SUBCASE("declared moments hold under independent quadrature") {
    for (int order : {0, 1, 2, 3, 4, 5}) {
      const KernelSpec k = build_kernel(KernelShape::higher_order, order);
      for (int j = 1; j <= k.order; ++j) {
        const double mj = oracle::simpson(
            [&](double u) { return std::pow(u, j) * k(u); }, -1.0, 1.0, 8000);
        CHECK(std::abs(mj) < 1e-9);
      }
    }
  }

  SUBCASE("errors") {
    CHECK_THROWS_AS(build_kernel("triweight", 0), std::invalid_argument);
    CHECK_THROWS_AS(build_kernel(KernelShape::higher_order, -1),
                    std::invalid_argument);
    KernelSpec degenerate = build_kernel(KernelShape::rectangular);
    degenerate.support = 0.0;
    CHECK_THROWS_AS(kernel_l2_norm(degenerate), std::invalid_argument);
  }
}

TEST_CASE("Holder membership") {
  HolderClassParams params;
  params.beta = 2.0;
  params.l = 0.1;
  params.big_l = 2.2;
  params.x_star = 0.0;
  params.interval_lo = -1.0;
  params.interval_hi = 0.6889;

  SUBCASE("bounded rate is a member") {
    const HolderReport rep = check_holder_membership(bounded_model(), params);
    CHECK(rep.member);
    CHECK(rep.violations.empty());
  }

  SUBCASE("zero rate fails the nondegeneracy bound") {
    ModelSpec m = bounded_model();
    m.rate = RateSpec::zero();
    const HolderReport rep = check_holder_membership(m, params);
    CHECK_FALSE(rep.member);
    REQUIRE_FALSE(rep.violations.empty());
    CHECK(rep.violations.front().constraint == "nondegeneracy");
  }

  SUBCASE("|r| fails the Holder condition on f'") {
    ModelSpec m = bounded_model();
    m.rate = RateSpec::custom([](double x) { return std::abs(x); }, 5.0, 1.0);
    HolderClassParams p = params;
    p.big_l = 5.0;
    p.x_star = 0.5;  // keep |F(x*)| >= l so the kink is the failing constraint
    const HolderReport rep = check_holder_membership(m, p);
    CHECK_FALSE(rep.member);
    bool holder_violation = false;
    for (const auto& v : rep.violations)
      if (v.constraint == "holder_fk") holder_violation = true;
    CHECK(holder_violation);
  }

  SUBCASE("beta below one rejected") {
    HolderClassParams p = params;
    p.beta = 0.5;
    CHECK_THROWS_AS(check_holder_membership(bounded_model(), p),
                    std::invalid_argument);
  }

  SUBCASE("monotone in L") {
    // Once a model is a member at some L, any larger L keeps it a member.
    bool was_member = false;
    for (double big_l : {0.5, 1.0, 2.2, 5.0, 50.0}) {
      HolderClassParams p = params;
      p.big_l = big_l;
      const bool member = check_holder_membership(bounded_model(), p).member;
      if (was_member) CHECK(member);
      was_member = was_member || member;
    }
    CHECK(was_member);
  }
}

TEST_CASE("model validation") {
  ModelSpec m = bounded_model();
  m.n = 0;
  CHECK_THROWS_WITH_AS(m.validate(), "model: n must be >= 1",
                       std::invalid_argument);
  m = bounded_model();
  m.horizon = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  // Closed-form flow must solve the drift ODE.
  DriftSpec bad = DriftSpec::linear_decay();
  bad.flow = [](double x, double dt) { return x * std::exp(-1.01 * dt); };
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
