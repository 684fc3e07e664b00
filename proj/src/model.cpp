#include "mfspike/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "mfspike/quadrature.hpp"

namespace mfspike {

DriftSpec DriftSpec::linear_decay() {
  DriftSpec d;
  d.kind = "linear-decay";
  d.b = [](double x) { return -x; };
  d.flow = [](double x, double dt) { return x * std::exp(-dt); };
  d.lipschitz_bound = 1.0;
  d.sign_opposing = true;
  return d;
}

DriftSpec DriftSpec::custom(std::function<double(double)> b,
                            double lipschitz_bound, bool sign_opposing) {
  DriftSpec d;
  d.kind = "custom";
  d.b = std::move(b);
  d.lipschitz_bound = lipschitz_bound;
  d.sign_opposing = sign_opposing;
  return d;
}

void DriftSpec::validate(double lo, double hi) const {
  if (!b) throw std::invalid_argument("drift: evaluation rule missing");
  const int steps = 200;
  for (int i = 0; i <= steps; ++i) {
    const double x = lo + (hi - lo) * i / steps;
    if (!std::isfinite(b(x)))
      throw std::invalid_argument("drift: b not finite on check interval");
  }
  if (flow) {
    // dphi/dt must match b(phi) on a (x, dt) grid.
    const double dts[] = {0.05, 0.31, 1.2};
    const double eps = 1e-6;
    for (int i = 0; i <= 20; ++i) {
      const double x = lo + (hi - lo) * i / 20;
      for (double dt : dts) {
        const double deriv = (flow(x, dt + eps) - flow(x, dt - eps)) / (2 * eps);
        const double residual = std::abs(deriv - b(flow(x, dt)));
        if (residual > 1e-9 * (1.0 + std::abs(b(flow(x, dt)))) + 1e-9)
          throw std::invalid_argument(
              "drift: closed-form flow does not solve dphi/dt = b(phi)");
      }
    }
  }
}

RateSpec RateSpec::two_minus_gauss() {
  RateSpec r;
  r.kind = "two-minus-gauss";
  r.f = [](double x) { return 2.0 - std::exp(-x * x); };
  r.upper_bound = 2.0;
  // sup |f'| = sup |2x e^{-x^2}| = sqrt(2/e)
  r.lipschitz_bound = std::sqrt(2.0 / std::exp(1.0));
  r.ray_monotone = true;
  return r;
}

RateSpec RateSpec::log1p_rate() {
  // Defined for r > -1; used by the purely excitatory configurations where
  // potentials stay nonnegative. Negative inputs in (-1, 0) only arise when
  // scanning F for equilibria.
  RateSpec r;
  r.kind = "log1p";
  r.f = [](double x) { return std::log1p(x); };
  r.upper_bound = std::nullopt;
  r.lipschitz_bound = 1.0;  // on r >= 0
  r.ray_monotone = true;
  r.check_lo = 0.0;
  r.check_hi = 5.0;
  return r;
}

RateSpec RateSpec::constant(double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("rate: constant must be >= 0");
  RateSpec r;
  r.kind = "constant";
  r.f = [lambda](double) { return lambda; };
  r.upper_bound = lambda;
  r.lipschitz_bound = 0.0;
  r.ray_monotone = true;
  return r;
}

RateSpec RateSpec::zero() { return constant(0.0); }

RateSpec RateSpec::custom(std::function<double(double)> f,
                          std::optional<double> upper_bound,
                          double lipschitz_bound, bool ray_monotone) {
  RateSpec r;
  r.kind = "custom";
  r.f = std::move(f);
  r.upper_bound = upper_bound;
  r.lipschitz_bound = lipschitz_bound;
  r.ray_monotone = ray_monotone;
  return r;
}

void RateSpec::validate() const {
  if (!f) throw std::invalid_argument("rate: evaluation rule missing");
  const int steps = 400;
  for (int i = 0; i <= steps; ++i) {
    const double x = check_lo + (check_hi - check_lo) * i / steps;
    const double v = f(x);
    if (!std::isfinite(v))
      throw std::invalid_argument("rate: f not finite on check interval");
    if (v < 0.0)
      throw std::invalid_argument("rate: f < 0 on check interval");
    if (upper_bound && v > *upper_bound + 1e-12)
      throw std::invalid_argument("rate: f exceeds its declared bound L");
  }
}

WeightLaw WeightLaw::uniform(double a, double b) {
  if (!(a < b)) throw std::invalid_argument("weights: need a < b");
  if (a == 0.0 && b == 0.0)
    throw std::invalid_argument("weights: degenerate support {0}");
  WeightLaw w;
  w.kind = "uniform";
  w.a = a;
  w.b = b;
  return w;
}

WeightLaw WeightLaw::point(double value) {
  if (value == 0.0)
    throw std::invalid_argument("weights: point mass at 0 is not allowed");
  WeightLaw w;
  w.kind = "point";
  w.value = value;
  return w;
}

WeightLaw WeightLaw::custom(std::function<double(std::mt19937_64&)> sampler,
                            double mean,
                            std::function<double(double)> abs_moment) {
  WeightLaw w;
  w.kind = "custom";
  w.sampler = std::move(sampler);
  w.custom_mean = mean;
  w.abs_moment_oracle = std::move(abs_moment);
  return w;
}

double WeightLaw::mean() const {
  if (kind == "uniform") return 0.5 * (a + b);
  if (kind == "point") return value;
  return custom_mean;
}

double WeightLaw::abs_moment(double p) const {
  if (p < 0) throw std::invalid_argument("weights: moment order must be >= 0");
  if (kind == "uniform") {
    // int |u|^p du / (b - a)
    auto piece = [p](double hi) {
      return std::pow(std::abs(hi), p + 1) / (p + 1);
    };
    double integral;
    if (a >= 0.0)
      integral = piece(b) - piece(a);
    else if (b <= 0.0)
      integral = piece(a) - piece(b);
    else
      integral = piece(a) + piece(b);
    return integral / (b - a);
  }
  if (kind == "point") return std::pow(std::abs(value), p);
  if (!abs_moment_oracle)
    throw std::invalid_argument("weights: custom law lacks a moment oracle");
  return abs_moment_oracle(p);
}

double WeightLaw::min_support() const {
  if (kind == "uniform") return a;
  if (kind == "point") return value;
  return -std::numeric_limits<double>::infinity();
}

double WeightLaw::sample(std::mt19937_64& rng) const {
  if (kind == "uniform") {
    std::uniform_real_distribution<double> dist(a, b);
    double u = dist(rng);
    while (u == 0.0) u = dist(rng);  // nu({0}) = 0
    return u;
  }
  if (kind == "point") return value;
  if (!sampler) throw std::invalid_argument("weights: custom law lacks sampler");
  double u = sampler(rng);
  while (u == 0.0) u = sampler(rng);
  return u;
}

void WeightLaw::validate() const {
  if (kind == "uniform") {
    if (!(a < b)) throw std::invalid_argument("weights: need a < b");
  } else if (kind == "point") {
    if (value == 0.0)
      throw std::invalid_argument("weights: point mass at 0 is not allowed");
  } else if (kind == "custom") {
    if (!sampler) throw std::invalid_argument("weights: sampler missing");
  } else {
    throw std::invalid_argument("weights: unknown family '" + kind + "'");
  }
}

void ModelSpec::validate() const {
  if (n < 1) throw std::invalid_argument("model: n must be >= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("model: horizon must be > 0");
  if (!std::isfinite(x0)) throw std::invalid_argument("model: x0 must be finite");
  drift.validate();
  rate.validate();
  weights.validate();
}

double evaluate_big_f(const ModelSpec& model, double x) {
  return model.big_f(x);
}

KernelShape kernel_shape_from_string(const std::string& tag) {
  if (tag == "rectangular") return KernelShape::rectangular;
  if (tag == "smooth-bump") return KernelShape::smooth_bump;
  if (tag == "higher-order") return KernelShape::higher_order;
  throw std::invalid_argument("kernel: unknown shape '" + tag + "'");
}

std::string to_string(KernelShape shape) {
  switch (shape) {
    case KernelShape::rectangular: return "rectangular";
    case KernelShape::smooth_bump: return "smooth-bump";
    case KernelShape::higher_order: return "higher-order";
  }
  return "rectangular";
}

namespace {

// Legendre P_j(u) for j = 0..k via the three-term recurrence.
void legendre_values(int k, double u, std::vector<double>& out) {
  out.resize(static_cast<std::size_t>(k) + 1);
  out[0] = 1.0;
  if (k >= 1) out[1] = u;
  for (int j = 2; j <= k; ++j)
    out[j] = ((2.0 * j - 1.0) * u * out[j - 1] - (j - 1.0) * out[j - 2]) / j;
}

}  // namespace

void KernelSpec::validate() const {
  if (!q) throw std::invalid_argument("kernel: evaluation rule missing");
  if (!(support > 0.0))
    throw std::invalid_argument("kernel: support radius must be > 0");
  const double mass = integrate([this](double u) { return q(u); }, -support,
                                support, 1e-12, 1e-13);
  if (std::abs(mass - 1.0) > 1e-10)
    throw std::invalid_argument("kernel: mass differs from 1");
  for (double u : {support * 1.0001, support * 2.0, -support * 1.5}) {
    if (q(u) != 0.0)
      throw std::invalid_argument("kernel: nonzero outside declared support");
  }
  for (int j = 1; j <= order; ++j) {
    const double mj = integrate(
        [this, j](double u) { return std::pow(u, j) * q(u); }, -support,
        support, 1e-12, 1e-13);
    if (std::abs(mj) > 1e-10)
      throw std::invalid_argument("kernel: declared vanishing moment fails");
  }
}

KernelSpec build_kernel(KernelShape shape, int order) {
  if (order < 0) throw std::invalid_argument("kernel: order must be >= 0");
  KernelSpec k;
  k.shape = shape;
  k.support = 1.0;
  switch (shape) {
    case KernelShape::rectangular: {
      k.order = 1;  // odd moments vanish by symmetry
      k.q = [](double u) { return std::abs(u) <= 1.0 ? 0.5 : 0.0; };
      k.lipschitz = false;
      k.nonnegative = true;
      break;
    }
    case KernelShape::smooth_bump: {
      k.order = 1;
      const double raw_mass = integrate(
          [](double u) {
            const double d = 1.0 - u * u;
            return d > 0.0 ? std::exp(-1.0 / d) : 0.0;
          },
          -1.0, 1.0, 1e-13, 1e-14);
      const double norm = 1.0 / raw_mass;
      k.q = [norm](double u) {
        const double d = 1.0 - u * u;
        return d > 0.0 ? norm * std::exp(-1.0 / d) : 0.0;
      };
      k.lipschitz = true;
      k.nonnegative = true;
      break;
    }
    case KernelShape::higher_order: {
      k.order = order;
      // Q(u) = sum_j ((2j+1)/2) P_j(0) P_j(u): moments 1..order vanish and
      // the mass is 1 because u^m reproduces itself at 0 under the projection.
      std::vector<double> p0;
      legendre_values(order, 0.0, p0);
      std::vector<double> coeff(p0.size());
      for (int j = 0; j <= order; ++j)
        coeff[j] = (2.0 * j + 1.0) / 2.0 * p0[j];
      k.q = [coeff, order](double u) {
        if (std::abs(u) > 1.0) return 0.0;
        std::vector<double> pj;
        legendre_values(order, u, pj);
        double s = 0.0;
        for (int j = 0; j <= order; ++j) s += coeff[j] * pj[j];
        return s;
      };
      k.lipschitz = true;
      k.nonnegative = order <= 1;
      break;
    }
  }
  k.validate();
  return k;
}

KernelSpec build_kernel(const std::string& shape, int order) {
  return build_kernel(kernel_shape_from_string(shape), order);
}

double kernel_l2_norm(const KernelSpec& kernel) {
  if (!(kernel.support > 0.0))
    throw std::invalid_argument("kernel_l2_norm: degenerate support");
  return integrate([&kernel](double u) { return kernel.q(u) * kernel.q(u); },
                   -kernel.support, kernel.support, 1e-9, 1e-14);
}

namespace {

double finite_difference(const std::function<double(double)>& f, double x,
                         int k, double d) {
  switch (k) {
    case 0: return f(x);
    case 1: return (f(x + d) - f(x - d)) / (2 * d);
    case 2: return (f(x + d) - 2 * f(x) + f(x - d)) / (d * d);
    case 3:
      return (f(x + 2 * d) - 2 * f(x + d) + 2 * f(x - d) - f(x - 2 * d)) /
             (2 * d * d * d);
    default:
      throw std::invalid_argument("membership check supports beta <= 4");
  }
}

}  // namespace

HolderReport check_holder_membership(const ModelSpec& model,
                                     const HolderClassParams& params,
                                     double grid_step) {
  if (!(grid_step > 0.0))
    throw std::invalid_argument("membership: grid_step must be > 0");
  if (params.beta < 1.0)
    throw std::invalid_argument("membership: beta must be >= 1");
  if (!(params.l > 0.0) || !(params.big_l > 0.0))
    throw std::invalid_argument("membership: l and L must be > 0");

  const int k = static_cast<int>(std::ceil(params.beta)) - 1;
  const double alpha = params.beta - k;
  if (k > 3) throw std::invalid_argument("membership check supports beta <= 4");

  HolderReport report;
  const double tol = 1e-6;
  const auto& f = model.rate.f;

  // Nondegeneracy at the estimation point.
  const double big_f_abs = std::abs(model.big_f(params.x_star));
  if (big_f_abs < params.l) {
    report.member = false;
    report.violations.push_back(
        {"nondegeneracy", params.x_star,
         "|F(x*)| = " + std::to_string(big_f_abs) + " < l"});
  }

  // Global bound and first derivative bound.
  const double lo = std::min(params.global_lo, params.global_hi);
  const double hi = std::max(params.global_lo, params.global_hi);
  const auto n_global = static_cast<std::size_t>((hi - lo) / grid_step) + 1;
  for (std::size_t i = 0; i <= n_global; ++i) {
    const double x = std::min(lo + static_cast<double>(i) * grid_step, hi);
    if (f(x) > params.big_l + tol) {
      report.member = false;
      report.violations.push_back({"sup_f", x, "f(x) > L"});
      break;
    }
  }
  for (std::size_t i = 0; i <= n_global; ++i) {
    const double x = std::min(lo + static_cast<double>(i) * grid_step, hi);
    const double d1 = finite_difference(f, x, 1, grid_step);
    if (std::abs(d1) > params.big_l + tol) {
      report.member = false;
      report.violations.push_back({"sup_f_prime", x, "|f'(x)| > L"});
      break;
    }
  }

  // alpha-Holder control of the k-th derivative on the traversed interval.
  const double ilo = std::min(params.interval_lo, params.interval_hi);
  const double ihi = std::max(params.interval_lo, params.interval_hi);
  const double fd_step = grid_step * (k >= 3 ? 4.0 : 1.0);
  const auto n_local =
      static_cast<std::size_t>((ihi - ilo) / grid_step) + 1;
  std::vector<double> xs, gs;
  xs.reserve(n_local + 1);
  gs.reserve(n_local + 1);
  for (std::size_t i = 0; i <= n_local; ++i) {
    const double x = std::min(ilo + static_cast<double>(i) * grid_step, ihi);
    xs.push_back(x);
    gs.push_back(finite_difference(f, x, k, fd_step));
  }
  bool holder_ok = true;
  for (std::size_t i = 0; i < xs.size() && holder_ok; ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) {
      const double dist = xs[j] - xs[i];
      const double bound = params.big_l * std::pow(dist, alpha) + tol;
      if (std::abs(gs[j] - gs[i]) > bound) {
        report.member = false;
        report.violations.push_back(
            {"holder_fk", xs[i],
             "|f^(k)(x) - f^(k)(y)| > L |x-y|^alpha near x, y = " +
                 std::to_string(xs[j])});
        holder_ok = false;
        break;
      }
    }
  }
  return report;
}

}  // namespace mfspike
