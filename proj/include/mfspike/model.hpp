#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace mfspike {

// Drift b of the membrane potential between jumps. When a closed-form flow
// phi(x, dt) is supplied it is used everywhere instead of numeric
// integration; `sign_opposing` marks drifts with x*b(x) <= 0, which shrink
// |x| between jumps (required by the monotone-decay thinning bound).
struct DriftSpec {
  std::string kind = "custom";
  std::function<double(double)> b;
  std::function<double(double, double)> flow;  // phi(x, dt); optional
  double lipschitz_bound = 0.0;
  bool sign_opposing = false;

  bool has_closed_form_flow() const { return static_cast<bool>(flow); }
  bool is_linear_decay() const { return kind == "linear-decay"; }

  static DriftSpec linear_decay();  // b(x) = -x
  static DriftSpec custom(std::function<double(double)> b,
                          double lipschitz_bound, bool sign_opposing = false);

  // Checks that b is finite on the interval and, when a closed-form flow is
  // present, that it solves dphi/dt = b(phi) with residual < 1e-9 on a grid.
  void validate(double lo = -3.0, double hi = 3.0) const;
};

// Spiking rate f >= 0. `upper_bound` enables the global-L thinning bound;
// `ray_monotone` states f(theta*x) <= f(x) for theta in [0,1], which combined
// with a sign-opposing drift makes the value of f at the last event a valid
// per-neuron bound until the next one.
struct RateSpec {
  std::string kind = "custom";
  std::function<double(double)> f;
  std::optional<double> upper_bound;
  double lipschitz_bound = 0.0;
  bool ray_monotone = false;
  // Range on which construction-time checks (f >= 0, f <= L) are evaluated.
  double check_lo = -3.0;
  double check_hi = 3.0;

  static RateSpec two_minus_gauss();           // 2 - exp(-r^2)
  static RateSpec log1p_rate();                // log(1 + r), r > -1
  static RateSpec constant(double lambda);
  static RateSpec zero();
  static RateSpec custom(std::function<double(double)> f,
                         std::optional<double> upper_bound,
                         double lipschitz_bound, bool ray_monotone = false);

  void validate() const;
};

// Synaptic weight law nu. nu({0}) = 0 within each family's semantics.
struct WeightLaw {
  std::string kind = "uniform";  // uniform | point | custom
  double a = 0.0, b = 1.0;       // uniform support
  double value = 1.0;            // point mass
  std::function<double(std::mt19937_64&)> sampler;       // custom
  std::function<double(double)> abs_moment_oracle;       // custom, p-th
  double custom_mean = 0.0;

  static WeightLaw uniform(double a, double b);
  static WeightLaw point(double value);
  static WeightLaw custom(std::function<double(std::mt19937_64&)> sampler,
                          double mean,
                          std::function<double(double)> abs_moment);

  double mean() const;
  double abs_moment(double p) const;
  double min_support() const;  // -inf for unbounded custom laws
  double sample(std::mt19937_64& rng) const;
  void validate() const;
};

struct ModelSpec {
  DriftSpec drift;
  RateSpec rate;
  WeightLaw weights;
  int n = 1;
  double x0 = 0.0;
  double horizon = 1.0;

  double big_f(double x) const {
    return drift.b(x) + weights.mean() * rate.f(x);
  }
  void validate() const;
};

// F(x) = b(x) + w f(x), the drift of the limit flow.
double evaluate_big_f(const ModelSpec& model, double x);

enum class KernelShape { rectangular, smooth_bump, higher_order };

KernelShape kernel_shape_from_string(const std::string& tag);
std::string to_string(KernelShape shape);

// Compactly supported kernel Q with unit mass and `order` vanishing moments.
struct KernelSpec {
  KernelShape shape = KernelShape::rectangular;
  int order = 1;          // moments 1..order vanish
  double support = 1.0;   // Q(u) = 0 for |u| > support
  std::function<double(double)> q;
  bool lipschitz = true;
  bool nonnegative = true;

  double operator()(double u) const { return q(u); }
  // Q_h(y) = Q(y/h)/h
  double scaled(double y, double h) const { return q(y / h) / h; }
  void validate() const;
};

// rectangular -> box kernel 1/2 on [-1,1]; smooth-bump -> normalized
// exp(-1/(1-u^2)); higher-order(k) -> polynomial kernel on [-1,1] built from
// the orthonormal Legendre basis so that moments 1..k vanish.
KernelSpec build_kernel(KernelShape shape, int order = 0);
KernelSpec build_kernel(const std::string& shape, int order = 0);

// Integral of Q^2, adaptive quadrature (relative error <= 1e-8).
double kernel_l2_norm(const KernelSpec& kernel);

// Holder class parameters: regularity beta = k + alpha with k = ceil(beta)-1,
// nondegeneracy |F(x*)| >= l, bounds f <= L and |f'| <= L on
// [global_lo, global_hi], and an alpha-Holder k-th derivative on
// [interval_lo, interval_hi].
struct HolderClassParams {
  double beta = 1.0;
  double l = 0.1;
  double big_l = 1.0;
  double x_star = 0.0;
  double interval_lo = -1.0;
  double interval_hi = 1.0;
  double global_lo = -3.0;
  double global_hi = 3.0;
};

struct HolderViolation {
  std::string constraint;
  double location = 0.0;
  std::string detail;
};

struct HolderReport {
  bool member = true;
  std::vector<HolderViolation> violations;
};

// Grid-based membership check with central finite differences. Supports
// beta <= 4 (k <= 3). Derivative bounds are tested against L + 1e-6 to absorb
// finite-difference error.
HolderReport check_holder_membership(const ModelSpec& model,
                                     const HolderClassParams& params,
                                     double grid_step = 1e-3);

}  // namespace mfspike
