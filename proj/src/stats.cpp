#include "mfspike/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfspike::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean: empty sample");
  double s = 0.0;
  for (double v : xs) s += v;
  return s / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance: need >= 2 samples");
  const double m = mean(xs);
  double s = 0.0;
  for (double v : xs) s += (v - m) * (v - m);
  return s / static_cast<double>(xs.size() - 1);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Lower incomplete gamma by series, x < a + 1.
double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper incomplete gamma by modified Lentz continued fraction, x >= a + 1.
double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0)
    throw std::invalid_argument("regularized_gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_cf(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0)
    throw std::invalid_argument("regularized_gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi_square_sf(double x, double k) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * k, 0.5 * x);
}

Chi2Result two_sample_chi_square(std::span<const std::size_t> counts_a,
                                 std::span<const std::size_t> counts_b) {
  if (counts_a.size() != counts_b.size())
    throw std::invalid_argument("two_sample_chi_square: size mismatch");
  double na = 0.0, nb = 0.0;
  for (std::size_t v : counts_a) na += static_cast<double>(v);
  for (std::size_t v : counts_b) nb += static_cast<double>(v);
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("two_sample_chi_square: empty sample");
  const double k1 = std::sqrt(nb / na);
  const double k2 = std::sqrt(na / nb);
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts_a.size(); ++i) {
    const double oa = static_cast<double>(counts_a[i]);
    const double ob = static_cast<double>(counts_b[i]);
    if (oa + ob == 0.0) continue;
    const double d = k1 * oa - k2 * ob;
    stat += d * d / (oa + ob);
    ++cells;
  }
  Chi2Result r;
  r.statistic = stat;
  r.dof = static_cast<double>(cells > 1 ? cells - 1 : 1);
  r.p_value = chi_square_sf(stat, r.dof);
  return r;
}

namespace {

// Marsaglia & Marsaglia's asymptotic CDF of the Anderson-Darling statistic.
double adinf(double z) {
  if (z <= 0.0) return 0.0;
  if (z < 2.0) {
    return std::exp(-1.2337141 / z) / std::sqrt(z) *
           (2.00012 +
            (0.247105 -
             (0.0649821 - (0.0347962 - (0.011672 - 0.00168691 * z) * z) * z) *
                 z) *
                z);
  }
  return std::exp(
      -std::exp(1.0776 -
                (2.30695 -
                 (0.43424 - (0.082433 - (0.008056 - 0.0003146 * z) * z) * z) *
                     z) *
                    z));
}

// Finite-n correction to adinf, same source.
double ad_errfix(double n, double x) {
  if (x > 0.8) {
    return (-130.2137 +
            (745.2337 -
             (1705.091 - (1950.646 - (1116.360 - 255.7844 * x) * x) * x) * x) *
                x) /
           n;
  }
  const double c = 0.01265 + 0.1757 / n;
  if (x < c) {
    double t = x / c;
    t = std::sqrt(t) * (1.0 - t) * (49.0 * t - 102.0);
    return t * (0.0037 / (n * n) + 0.00078 / n + 0.00006) / n;
  }
  double t = (x - c) / (0.8 - c);
  t = -0.00022633 +
      (6.54034 - (14.6538 - (14.458 - (8.259 - 1.91864 * t) * t) * t) * t) * t;
  return t * (0.04213 + 0.01365 / n) / n;
}

}  // namespace

AndersonDarlingResult anderson_darling_normal(std::vector<double> samples,
                                              double mu, double sigma) {
  const std::size_t n = samples.size();
  if (n < 5) throw std::invalid_argument("anderson_darling: need >= 5 samples");
  if (sigma <= 0.0) throw std::invalid_argument("anderson_darling: sigma <= 0");
  std::sort(samples.begin(), samples.end());
  double a2 = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = normal_cdf((samples[i] - mu) / sigma);
    double v = normal_cdf((samples[n - 1 - i] - mu) / sigma);
    u = std::clamp(u, 1e-300, 1.0 - 1e-16);
    v = std::clamp(v, 1e-300, 1.0 - 1e-16);
    a2 += (2.0 * static_cast<double>(i) + 1.0) *
          (std::log(u) + std::log1p(-v));
  }
  a2 = -dn - a2 / dn;
  AndersonDarlingResult r;
  r.a_squared = a2;
  const double cdf = std::clamp(adinf(a2) + ad_errfix(dn, adinf(a2)), 0.0, 1.0);
  r.p_value = 1.0 - cdf;
  return r;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("fit_line: need >= 3 matched points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: degenerate x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  if (x.size() > 2) f.slope_se = std::sqrt(rss / ((n - 2.0) * sxx));
  return f;
}

}  // namespace mfspike::stats
