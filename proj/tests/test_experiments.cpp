#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "mfspike/checks.hpp"
#include "mfspike/experiments.hpp"
#include "mfspike/flow.hpp"
#include "mfspike/stats.hpp"

using namespace mfspike;

TEST_CASE("bandwidth rule") {
  BandwidthRule rule{1.0, 0.49};
  CHECK(rule.h(20000) == doctest::Approx(std::pow(20000.0, -0.49)));
  CHECK_NOTHROW(rule.validate());
  rule.exponent = 0.5;
  CHECK_THROWS_AS(rule.validate(), std::invalid_argument);
  rule.exponent = 0.0;
  CHECK_THROWS_AS(rule.validate(), std::invalid_argument);
}

TEST_CASE("risk slope fit on an exact power law") {
  const checks::CheckResult res = checks::check_risk_fixture();
  CHECK(res.pass);

  RiskCurve curve;
  for (int n : {400, 800, 1600, 3200}) {
    RiskPoint p;
    p.n = n;
    p.mse = 2.1 * std::pow(static_cast<double>(n), -2.0 / 3.0);
    curve.points.push_back(p);
  }
  fit_risk_slope(curve);
  CHECK(curve.slope == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
  CHECK(curve.slope_se < 1e-12);
}

TEST_CASE("risk curve requires three distinct sizes") {
  RiskCurve curve;
  for (int n : {400, 400, 800}) {
    RiskPoint p;
    p.n = n;
    p.mse = 1.0;
    curve.points.push_back(p);
  }
  CHECK_THROWS_AS(fit_risk_slope(curve), std::invalid_argument);
}

TEST_CASE("figure reproduction at desk scale") {
  const FigPlan plan = fig1_plan(400, 99);
  const std::vector<FigRow> rows = run_fig(plan);
  REQUIRE(rows.size() == 9);
  for (const FigRow& r : rows) {
    CHECK(std::isfinite(r.estimate));
    CHECK(std::abs(r.error) < 1.0);
    CHECK(r.true_value == doctest::Approx(2.0 - std::exp(-r.x_star * r.x_star)));
  }
}

TEST_CASE("partial observation blocks") {
  FigPlan plan = fig1_plan(200, 7);

  SUBCASE("gamma must fit the population") {
    CHECK_THROWS_AS(reproduce_partial_obs(plan, {300}), std::invalid_argument);
    CHECK_THROWS_AS(reproduce_partial_obs(plan, {150, 100}),
                    std::invalid_argument);
  }

  SUBCASE("full-population block matches the full estimator") {
    plan.x_stars = {0.0, 0.3};
    const std::vector<PartialRow> part = reproduce_partial_obs(plan, {200});
    const std::vector<FigRow> full = run_fig(plan);
    REQUIRE(part.size() == 2);
    for (std::size_t i = 0; i < part.size(); ++i)
      CHECK(part[i].estimate ==
            doctest::Approx(full[i].estimate).epsilon(1e-12));
  }

  SUBCASE("disjoint blocks are consumed in order") {
    plan.x_stars = {0.2};
    const std::vector<PartialRow> rows =
        reproduce_partial_obs(plan, {100, 50, 10});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].gamma == 100);
    CHECK(rows[2].gamma == 10);
  }
}

TEST_CASE("partial variance ordering at desk scale") {
  FigPlan plan = fig1_plan(800, 21);
  const std::vector<PartialVarianceRow> rows =
      partial_variance_study(plan, {40, 200, 800}, 12, 0.6, 0);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].variance >= rows[1].variance);
  CHECK(rows[1].variance >= rows[2].variance);
}

TEST_CASE("desk-scale risk curve runs and reports omega failures") {
  ExperimentPlan plan;
  const FigPlan base = fig1_plan(1000);
  plan.model = base.model;
  plan.kernel = base.kernel;
  plan.n_values = {200, 400, 800};
  plan.bandwidth = {1.0, 1.0 / 3.0};
  plan.replicates = 16;
  plan.x_stars = {0.2};
  plan.seed = 515;
  const RiskCurve curve = risk_curve(plan, plan.model.rate);
  REQUIRE(curve.points.size() == 3);
  for (const RiskPoint& p : curve.points) {
    CHECK(p.mse >= 0.0);
    CHECK(p.omega_failures + static_cast<int>(p.sq_errors.size()) ==
          plan.replicates);
  }
  CHECK(curve.slope < 0.0);  // decreasing risk at these scales
}

TEST_CASE("clt study at desk scale") {
  const FigPlan base = fig1_plan(800);
  const CltReport rep = clt_study(base.model, 0.0, base.kernel, 800,
                                  std::pow(800.0, -0.45), 64, 2024, 0);
  CHECK(rep.kappa_sq == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(std::abs(rep.mean) < 4.0 * rep.mean_se);
  CHECK(rep.variance_ratio > 0.4);
  CHECK(rep.variance_ratio < 1.9);
  CHECK(rep.ad_p_value >= 0.0);
  CHECK(rep.standardized.size() == 64);
}

TEST_CASE("clt study rejects equilibria") {
  const FigPlan base = fig1_plan(200);
  const std::vector<double> roots =
      find_equilibria(base.model, {-5.0, 5.0});
  REQUIRE(roots.size() == 1);
  CHECK_THROWS_AS(clt_study(base.model, roots[0], base.kernel, 200,
                            std::pow(200.0, -0.45), 16, 1, 0),
                  std::domain_error);
}

TEST_CASE("strong approximation study stays bounded at desk scale") {
  const FigPlan base = fig1_plan(200);
  ModelSpec m = base.model;
  m.horizon = 5.0;
  const StrongApproxStudy study = strong_approx_study(m, {200, 800}, 12, 7, 0);
  REQUIRE(study.mean_sup_sq.size() == 2);
  CHECK(study.max_over_min < 3.0);
}

TEST_CASE("extinction study at desk scale") {
  FigPlan dying = fig4_plan(150);
  dying.model.horizon = 30.0;
  const ExtinctionStudy s = extinction_study(dying.model, 10, 5, 0);
  CHECK(s.seeds == 10);
  CHECK(s.extinct >= 6);

  FigPlan meta = fig3_plan(150);
  meta.model.horizon = 30.0;
  const ExtinctionStudy s2 = extinction_study(meta.model, 10, 5, 0);
  CHECK(s2.extinct <= 4);
}

TEST_CASE("plan validation") {
  ExperimentPlan plan;
  const FigPlan base = fig1_plan(100);
  plan.model = base.model;
  plan.kernel = base.kernel;
  plan.n_values = {100, 200, 400};
  plan.replicates = 0;
  plan.x_stars = {0.2};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
  plan.replicates = 4;
  plan.n_values = {100, -1, 400};
  CHECK_THROWS_AS(plan.validate(), std::invalid_argument);
}
