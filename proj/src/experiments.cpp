#include "mfspike/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "mfspike/flow.hpp"
#include "mfspike/parallel.hpp"
#include "mfspike/rng.hpp"
#include "mfspike/stats.hpp"

namespace mfspike {

double BandwidthRule::h(int n) const {
  return c * std::pow(static_cast<double>(n), -exponent);
}

void BandwidthRule::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("bandwidth: c must be > 0");
  if (!(exponent > 0.0 && exponent < 0.5))
    throw std::invalid_argument(
        "bandwidth: exponent must lie in (0, 1/2) so that n h^2 diverges");
}

void ExperimentPlan::validate() const {
  model.validate();
  bandwidth.validate();
  if (replicates < 1)
    throw std::invalid_argument("plan: replicates must be >= 1");
  for (int n : n_values)
    if (n < 1) throw std::invalid_argument("plan: all n must be >= 1");
  if (x_stars.empty())
    throw std::invalid_argument("plan: estimation points missing");
}

namespace {

ModelSpec with_n(ModelSpec model, int n) {
  model.n = n;
  return model;
}

}  // namespace

FigPlan fig1_plan(int n, std::uint64_t seed) {
  FigPlan p;
  p.model.drift = DriftSpec::linear_decay();
  p.model.rate = RateSpec::two_minus_gauss();
  p.model.weights = WeightLaw::uniform(-2.0, 3.0);
  p.model.n = n;
  p.model.x0 = -1.0;
  p.model.horizon = 10.0;
  p.kernel = build_kernel(KernelShape::rectangular);
  p.bandwidth = std::pow(static_cast<double>(n), -0.49);
  p.x_stars = {-0.6, -0.4, -0.2, 0.0, 0.2, 0.3, 0.4, 0.5, 0.6};
  p.seed = seed;
  return p;
}

FigPlan fig3_plan(int n, std::uint64_t seed) {
  FigPlan p;
  p.model.drift = DriftSpec::linear_decay();
  p.model.rate = RateSpec::log1p_rate();
  p.model.weights = WeightLaw::uniform(0.0, 4.0);
  p.model.n = n;
  p.model.x0 = 0.1;
  p.model.horizon = 10.0;
  p.kernel = build_kernel(KernelShape::rectangular);
  p.bandwidth = std::pow(static_cast<double>(n), -0.49);
  p.x_stars = {0.2, 0.5, 0.7, 1.2, 1.7, 2.2};
  p.seed = seed;
  return p;
}

FigPlan fig4_plan(int n, std::uint64_t seed) {
  FigPlan p;
  p.model.drift = DriftSpec::linear_decay();
  p.model.rate = RateSpec::log1p_rate();
  p.model.weights = WeightLaw::uniform(0.0, 1.0);
  p.model.n = n;
  p.model.x0 = 1.0;
  p.model.horizon = 10.0;
  p.kernel = build_kernel(KernelShape::rectangular);
  p.bandwidth = std::pow(static_cast<double>(n), -0.49);
  p.x_stars = {0.1, 0.2, 0.3, 0.5, 0.7, 0.8, 0.9};
  p.seed = seed;
  return p;
}

std::vector<FigRow> run_fig(const FigPlan& plan) {
  const double h = plan.bandwidth > 0.0
                       ? plan.bandwidth
                       : std::pow(static_cast<double>(plan.model.n), -0.49);
  const SystemTrajectory traj = simulate(plan.model, plan.seed);
  const FlowSolution flow = solve_limit_ode(plan.model);
  EstimatorConfig cfg;
  cfg.kernel = plan.kernel;
  cfg.bandwidth = h;
  cfg.per_neuron = false;
  const std::vector<BatchRow> rows =
      estimate_batch(traj, cfg, plan.x_stars, &flow, &plan.model.rate);
  std::vector<FigRow> out;
  out.reserve(rows.size());
  for (const BatchRow& r : rows) {
    FigRow fr;
    fr.x_star = r.x_star;
    fr.estimate = r.estimate;
    fr.true_value = r.true_value.value_or(0.0);
    fr.error = r.error.value_or(0.0);
    fr.omega = r.omega.value_or(false);
    fr.degenerate = r.degenerate;
    out.push_back(fr);
  }
  return out;
}

std::vector<PartialRow> reproduce_partial_obs(const FigPlan& plan,
                                              const std::vector<int>& gammas) {
  std::uint64_t total = 0;
  for (int g : gammas) {
    if (g < 1 || g > plan.model.n)
      throw std::invalid_argument("partial observation: gamma out of range");
    total += static_cast<std::uint64_t>(g);
  }
  if (total > static_cast<std::uint64_t>(plan.model.n))
    throw std::invalid_argument(
        "partial observation: disjoint blocks exceed the population");
  const double h = plan.bandwidth > 0.0
                       ? plan.bandwidth
                       : std::pow(static_cast<double>(plan.model.n), -0.49);
  const SystemTrajectory traj = simulate(plan.model, plan.seed);
  std::vector<PartialRow> rows;
  std::uint32_t offset = 0;
  for (int g : gammas) {
    EstimatorConfig cfg;
    cfg.kernel = plan.kernel;
    cfg.bandwidth = h;
    cfg.per_neuron = false;
    cfg.observed = ObservedSet::range(offset, static_cast<std::uint32_t>(g));
    offset += static_cast<std::uint32_t>(g);
    for (double xs : plan.x_stars) {
      cfg.x_star = xs;
      const EstimateReport rep = estimate_rate(traj, cfg);
      rows.push_back(
          {g, xs, rep.estimate, rep.estimate - plan.model.rate.f(xs)});
    }
  }
  return rows;
}

std::vector<PartialVarianceRow> partial_variance_study(
    const FigPlan& plan, const std::vector<int>& gammas, int seeds,
    double x_star, int threads) {
  if (seeds < 2)
    throw std::invalid_argument("partial variance study: need >= 2 seeds");
  for (int g : gammas)
    if (g < 1 || g > plan.model.n)
      throw std::invalid_argument("partial observation: gamma out of range");
  const double h = plan.bandwidth > 0.0
                       ? plan.bandwidth
                       : std::pow(static_cast<double>(plan.model.n), -0.49);

  // estimates[seed][gamma]
  std::vector<std::vector<double>> estimates(
      static_cast<std::size_t>(seeds),
      std::vector<double>(gammas.size(), 0.0));
  parallel_for_index(
      static_cast<std::size_t>(seeds), threads, [&](std::size_t s) {
        const std::uint64_t seed =
            derive_seed(plan.seed, rng_purpose::replicate, s);
        const SystemTrajectory traj = simulate(plan.model, seed);
        // One per-neuron occupation pass serves every prefix block.
        EstimatorConfig cfg;
        cfg.kernel = plan.kernel;
        cfg.bandwidth = h;
        cfg.x_star = x_star;
        cfg.per_neuron = true;
        const EstimateReport full = estimate_rate(traj, cfg);
        std::vector<double> occ_prefix(full.neuron_occupation.size() + 1, 0.0);
        for (std::size_t i = 0; i < full.neuron_occupation.size(); ++i)
          occ_prefix[i + 1] = occ_prefix[i] + full.neuron_occupation[i];
        for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
          const auto g = static_cast<std::uint32_t>(gammas[gi]);
          double num = 0.0;
          for (const SpikeEvent& ev : traj.events()) {
            if (ev.spiker < g)
              num += cfg.kernel.scaled(ev.pre_potential - x_star, h);
          }
          const double den = occ_prefix[g];
          estimates[s][gi] = den != 0.0 ? num / den : 0.0;
        }
      });

  std::vector<PartialVarianceRow> rows;
  for (std::size_t gi = 0; gi < gammas.size(); ++gi) {
    std::vector<double> vals;
    vals.reserve(static_cast<std::size_t>(seeds));
    for (int s = 0; s < seeds; ++s)
      vals.push_back(estimates[static_cast<std::size_t>(s)][gi]);
    rows.push_back({gammas[gi], stats::variance(vals), stats::mean(vals)});
  }
  return rows;
}

void fit_risk_slope(RiskCurve& curve) {
  std::set<int> distinct;
  for (const RiskPoint& p : curve.points) distinct.insert(p.n);
  if (distinct.size() < 3)
    throw std::invalid_argument("risk curve: slope fit needs >= 3 distinct n");
  std::vector<double> lx, ly;
  for (const RiskPoint& p : curve.points) {
    if (!(p.mse > 0.0))
      throw std::invalid_argument("risk curve: nonpositive mse in slope fit");
    lx.push_back(std::log(static_cast<double>(p.n)));
    ly.push_back(std::log(p.mse));
  }
  const stats::LineFit fit = stats::fit_line(lx, ly);
  curve.slope = fit.slope;
  curve.slope_se = fit.slope_se;
  curve.intercept = fit.intercept;
}

RiskCurve risk_curve(const ExperimentPlan& plan, const RateSpec& true_rate) {
  plan.validate();
  if (plan.x_stars.size() != 1)
    throw std::invalid_argument("risk curve: exactly one estimation point");
  const double x_star = plan.x_stars.front();
  const FlowSolution flow = solve_limit_ode(plan.model);

  RiskCurve curve;
  for (std::size_t ni = 0; ni < plan.n_values.size(); ++ni) {
    const int n = plan.n_values[ni];
    const ModelSpec model = with_n(plan.model, n);
    RiskPoint point;
    point.n = n;
    point.h = plan.bandwidth.h(n);
    std::vector<double> sq(static_cast<std::size_t>(plan.replicates), 0.0);
    std::vector<char> omega(static_cast<std::size_t>(plan.replicates), 0);
    parallel_for_index(
        static_cast<std::size_t>(plan.replicates), plan.threads,
        [&](std::size_t r) {
          const std::uint64_t seed = derive_seed(
              plan.seed, rng_purpose::replicate + ni, r);
          const SystemTrajectory traj = simulate(model, seed);
          EstimatorConfig cfg;
          cfg.kernel = plan.kernel;
          cfg.bandwidth = point.h;
          cfg.x_star = x_star;
          cfg.per_neuron = false;
          const EstimateReport rep = estimate_rate(traj, cfg);
          const OccupationComparison cmp =
              compare_occupation(traj, flow, cfg);
          const double err = rep.estimate - true_rate.f(x_star);
          sq[r] = err * err;
          omega[r] = cmp.omega ? 1 : 0;
        });
    double acc = 0.0;
    int kept = 0;
    for (std::size_t r = 0; r < sq.size(); ++r) {
      point.all_sq_errors.push_back(sq[r]);
      if (omega[r]) {
        point.sq_errors.push_back(sq[r]);
        acc += sq[r];
        ++kept;
      } else {
        ++point.omega_failures;
      }
    }
    point.mse = kept > 0 ? acc / kept : 0.0;
    curve.points.push_back(std::move(point));
  }
  fit_risk_slope(curve);
  return curve;
}

CltReport clt_study(const ModelSpec& model, double x_star,
                    const KernelSpec& kernel, int n, double h, int replicates,
                    std::uint64_t seed, int threads) {
  if (replicates < 8)
    throw std::invalid_argument("clt study: need >= 8 replicates");
  CltReport rep;
  rep.kappa_sq = clt_variance(with_n(model, n), x_star, kernel);  // rejects F(x*) = 0
  const ModelSpec m = with_n(model, n);
  const double scale = std::sqrt(static_cast<double>(n) * h);
  const double truth = m.rate.f(x_star);
  std::vector<double> z(static_cast<std::size_t>(replicates), 0.0);
  parallel_for_index(
      static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        const std::uint64_t s = derive_seed(seed, rng_purpose::replicate, r);
        const SystemTrajectory traj = simulate(m, s);
        EstimatorConfig cfg;
        cfg.kernel = kernel;
        cfg.bandwidth = h;
        cfg.x_star = x_star;
        cfg.per_neuron = false;
        const EstimateReport er = estimate_rate(traj, cfg);
        z[r] = scale * (er.estimate - truth);
      });
  rep.standardized = z;
  rep.empirical_variance = stats::variance(z);
  rep.variance_ratio = rep.empirical_variance / rep.kappa_sq;
  rep.mean = stats::mean(z);
  rep.mean_se = std::sqrt(rep.empirical_variance /
                          static_cast<double>(replicates));
  const auto ad =
      stats::anderson_darling_normal(z, 0.0, std::sqrt(rep.kappa_sq));
  rep.ad_statistic = ad.a_squared;
  rep.ad_p_value = ad.p_value;
  return rep;
}

StrongApproxStudy strong_approx_study(const ModelSpec& base,
                                      const std::vector<int>& n_values,
                                      int replicates, std::uint64_t seed,
                                      int threads) {
  StrongApproxStudy study;
  study.n_values = n_values;
  const FlowSolution flow = solve_limit_ode(base);
  std::vector<double> probes;
  for (int i = 0; i <= 100; ++i)
    probes.push_back(base.horizon * i / 100.0);
  for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
    const ModelSpec m = with_n(base, n_values[ni]);
    std::vector<double> vals(static_cast<std::size_t>(replicates), 0.0);
    parallel_for_index(
        static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
          const std::uint64_t s =
              derive_seed(seed, rng_purpose::replicate + ni, r);
          const SystemTrajectory traj = simulate(m, s);
          const StrongApproxReport rep =
              strong_approx_diag(traj, flow, probes);
          vals[r] = rep.moment2;
        });
    study.mean_sup_sq.push_back(stats::mean(vals));
  }
  const auto [mn, mx] = std::minmax_element(study.mean_sup_sq.begin(),
                                            study.mean_sup_sq.end());
  study.max_over_min = *mx / *mn;
  return study;
}

ExtinctionStudy extinction_study(const ModelSpec& model, int seeds,
                                 std::uint64_t master_seed, int threads) {
  ExtinctionStudy study;
  study.seeds = seeds;
  std::vector<char> flags(static_cast<std::size_t>(seeds), 0);
  parallel_for_index(
      static_cast<std::size_t>(seeds), threads, [&](std::size_t s) {
        const std::uint64_t sd =
            derive_seed(master_seed, rng_purpose::replicate, s);
        const SystemTrajectory traj = simulate(model, sd);
        flags[s] = detect_extinction(traj).extinct ? 1 : 0;
      });
  for (char f : flags) study.extinct += f;
  study.fraction = static_cast<double>(study.extinct) / seeds;
  return study;
}

}  // namespace mfspike
