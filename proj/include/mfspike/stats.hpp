#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfspike::stats {

double mean(std::span<const double> xs);
// Unbiased sample variance.
double variance(std::span<const double> xs);

double normal_cdf(double z);

// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Survival function of the chi-square distribution with k dof.
double chi_square_sf(double x, double k);

struct Chi2Result {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Two-sample chi-square homogeneity test over matched histogram cells.
// Cells where both samples are empty are dropped.
Chi2Result two_sample_chi_square(std::span<const std::size_t> counts_a,
                                 std::span<const std::size_t> counts_b);

struct AndersonDarlingResult {
  double a_squared = 0.0;
  double p_value = 1.0;
};

// Anderson-Darling test of `samples` against N(mu, sigma^2) with both
// parameters known (fully specified case).
AndersonDarlingResult anderson_darling_normal(std::vector<double> samples,
                                              double mu, double sigma);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

// Ordinary least squares y = a + b x with the usual slope standard error.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace mfspike::stats
