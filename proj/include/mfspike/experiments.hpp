#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfspike/estimator.hpp"
#include "mfspike/model.hpp"

namespace mfspike {

// h(n) = c * n^{-exponent}. The exponent must lie in (0, 1/2) so that
// n h(n)^2 diverges.
struct BandwidthRule {
  double c = 1.0;
  double exponent = 1.0 / 3.0;
  double h(int n) const;
  void validate() const;
};

struct ExperimentPlan {
  ModelSpec model;
  KernelSpec kernel;
  std::vector<int> n_values;
  BandwidthRule bandwidth;
  int replicates = 1;
  std::vector<double> x_stars;
  std::uint64_t seed = 12345;
  int threads = 0;  // 0 -> hardware concurrency

  void validate() const;
};

// One figure-style reproduction: a single large run estimated on a grid.
struct FigPlan {
  ModelSpec model;
  KernelSpec kernel;
  double bandwidth = 0.0;  // 0 -> n^{-0.49}
  std::vector<double> x_stars;
  std::uint64_t seed = 12345;
};

struct FigRow {
  double x_star = 0.0;
  double estimate = 0.0;
  double true_value = 0.0;
  double error = 0.0;
  bool omega = false;
  bool degenerate = false;
};

// Built-in configurations of the three simulated systems: the bounded-rate
// system with equilibrium near 0.6889, the metastable log1p system (w = 2)
// and the extinguishing log1p system (w = 1/2).
FigPlan fig1_plan(int n = 20000, std::uint64_t seed = 12345);
FigPlan fig3_plan(int n = 20000, std::uint64_t seed = 12345);
FigPlan fig4_plan(int n = 20000, std::uint64_t seed = 12345);

std::vector<FigRow> run_fig(const FigPlan& plan);

struct PartialRow {
  int gamma = 0;
  double x_star = 0.0;
  double estimate = 0.0;
  double error = 0.0;
};

// Partial-observation estimates on one stored run, with disjoint neuron
// blocks allocated in the order the gammas are given.
std::vector<PartialRow> reproduce_partial_obs(const FigPlan& plan,
                                              const std::vector<int>& gammas);

// Across-seed variance of the partial estimator at one point, prefix blocks
// {0..gamma-1}; one simulation per seed serves every gamma.
struct PartialVarianceRow {
  int gamma = 0;
  double variance = 0.0;
  double mean = 0.0;
};
std::vector<PartialVarianceRow> partial_variance_study(
    const FigPlan& plan, const std::vector<int>& gammas, int seeds,
    double x_star, int threads = 0);

struct RiskPoint {
  int n = 0;
  double h = 0.0;
  std::vector<double> sq_errors;       // Omega-event replicas only
  std::vector<double> all_sq_errors;   // every replica
  int omega_failures = 0;
  double mse = 0.0;  // mean over Omega-event replicas
};

struct RiskCurve {
  std::vector<RiskPoint> points;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

// L2 risk against n with the plan's bandwidth rule, restricted to the
// Omega event; Omega failures are counted, never silently dropped.
RiskCurve risk_curve(const ExperimentPlan& plan, const RateSpec& true_rate);

// Log-log least squares of mse against n (used on real and fixture rows).
void fit_risk_slope(RiskCurve& curve);

struct CltReport {
  std::vector<double> standardized;  // sqrt(n h) (estimate - f(x*))
  double empirical_variance = 0.0;
  double kappa_sq = 0.0;
  double variance_ratio = 0.0;
  double mean = 0.0;
  double mean_se = 0.0;
  double ad_statistic = 0.0;
  double ad_p_value = 0.0;
};

CltReport clt_study(const ModelSpec& model, double x_star,
                    const KernelSpec& kernel, int n, double h, int replicates,
                    std::uint64_t seed, int threads = 0);

struct StrongApproxStudy {
  std::vector<int> n_values;
  std::vector<double> mean_sup_sq;  // E[sup_t |V|^2] per n
  double max_over_min = 0.0;
};

StrongApproxStudy strong_approx_study(const ModelSpec& base,
                                      const std::vector<int>& n_values,
                                      int replicates, std::uint64_t seed,
                                      int threads = 0);

struct ExtinctionStudy {
  int seeds = 0;
  int extinct = 0;
  double fraction = 0.0;
};

ExtinctionStudy extinction_study(const ModelSpec& model, int seeds,
                                 std::uint64_t master_seed, int threads = 0);

}  // namespace mfspike
