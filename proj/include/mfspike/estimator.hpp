#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfspike/flow.hpp"
#include "mfspike/model.hpp"
#include "mfspike/simulator.hpp"

namespace mfspike {

// Observed subset of neurons. Defaults to the full system.
class ObservedSet {
 public:
  ObservedSet() = default;
  static ObservedSet full() { return ObservedSet(); }
  static ObservedSet range(std::uint32_t first, std::uint32_t count);
  static ObservedSet from_indices(std::vector<std::uint32_t> indices);

  bool is_full() const { return full_; }
  std::size_t size(int n) const {
    return full_ ? static_cast<std::size_t>(n) : idx_.size();
  }
  const std::vector<std::uint32_t>& indices() const { return idx_; }
  // Membership bitmap over {0..n-1}.
  std::vector<char> bitmap(int n) const;

 private:
  bool full_ = true;
  std::vector<std::uint32_t> idx_;
};

struct EstimatorConfig {
  KernelSpec kernel;
  double bandwidth = 0.1;
  double x_star = 0.0;
  // Observation window [0, horizon]; defaults to the trajectory terminal.
  std::optional<double> horizon;
  ObservedSet observed;
  double epsilon = 0.1;  // Omega-event tolerance
  // Fill per-neuron occupation contributions (cheap to skip in bulk studies).
  bool per_neuron = true;

  void validate() const;
};

struct EstimateDiagnostics {
  double a_n = 0.0;             // per-neuron occupation average
  double a_lim = 0.0;           // limit-flow occupation
  bool omega = false;           // |a_n / a_lim - 1| <= epsilon
  bool degenerate_limit = false;
  double martingale = 0.0;      // M_T
  double bias = 0.0;            // B_T
  double recomposed_error = 0.0;  // (M + B) / a_n
  bool decomposition_available = false;
};

struct EstimateReport {
  double estimate = 0.0;
  double numerator = 0.0;    // kernel-weighted spike mass
  double denominator = 0.0;  // occupation integral
  bool degenerate = false;   // 0/0 rule applied
  std::vector<double> neuron_occupation;  // per neuron, zero outside S
  std::optional<bool> omega_flag;
  std::vector<std::string> warnings;
  std::optional<EstimateDiagnostics> diagnostics;
};

// sum_{i in S} int_0^T Q_h(X_i(s) - x*) ds. Exact crossing-time arithmetic
// for the rectangular kernel on the linear-drift path, per-segment adaptive
// quadrature otherwise.
double occupation_integral(const SystemTrajectory& traj,
                           const EstimatorConfig& cfg);

// Kernel rate estimator: in-window spike mass over occupation, 0/0 := 0.
EstimateReport estimate_rate(const SystemTrajectory& traj,
                             const EstimatorConfig& cfg);

// Validation-mode estimate: also compares the occupation to its limit,
// sets the Omega flag and (under full observation) the error decomposition.
EstimateReport estimate_rate_validated(const SystemTrajectory& traj,
                                       const EstimatorConfig& cfg,
                                       const FlowSolution& flow,
                                       const RateSpec& true_rate);

struct OccupationComparison {
  double a_n = 0.0;
  double a_lim = 0.0;
  bool omega = false;
  bool degenerate = false;  // limit flow never visits the window
};

OccupationComparison compare_occupation(const SystemTrajectory& traj,
                                        const FlowSolution& flow,
                                        const EstimatorConfig& cfg);

struct DecompositionReport {
  double martingale = 0.0;  // M_T
  double bias = 0.0;        // B_T
  double a_n = 0.0;
  double estimate = 0.0;
  double true_value = 0.0;
  double recomposed_error = 0.0;
  double identity_residual = 0.0;  // (estimate - f(x*)) - (M + B)/A_N
};

// Splits the estimation error into the martingale and bias parts and checks
// the exact recomposition identity. Requires full observation.
DecompositionReport error_decomposition(const SystemTrajectory& traj,
                                        const EstimatorConfig& cfg,
                                        const RateSpec& true_rate);

struct StrongApproxReport {
  std::vector<double> probes;
  std::vector<double> sup_abs_v;  // per neuron, sup over probes
  double moment1 = 0.0;           // mean over neurons of sup^p
  double moment2 = 0.0;
  double moment4 = 0.0;
  std::vector<double> samples;  // [probe][neuron]; empty when too large
  bool samples_kept = false;
};

// Fluctuation process V_i(t) = sqrt(N) (X_i(t) - x_t) sampled on a probe grid.
StrongApproxReport strong_approx_diag(const SystemTrajectory& traj,
                                      const FlowSolution& flow,
                                      std::span<const double> probes);

// kappa^2 = |F(x*) f(x*)| int Q^2. Throws when F(x*) is degenerate.
double clt_variance(const ModelSpec& model, double x_star,
                    const KernelSpec& kernel);

// sigma^2 = f(x*) / |F(x*)| int Q^2 (martingale-level variance).
double martingale_variance(const ModelSpec& model, double x_star,
                           const KernelSpec& kernel);

struct BatchRow {
  double x_star = 0.0;
  double estimate = 0.0;
  std::optional<double> true_value;
  std::optional<double> error;
  std::optional<bool> omega;
  bool degenerate = false;
};

// Batch evaluation over estimation points; validation fields filled when the
// true rate (and flow) are supplied.
std::vector<BatchRow> estimate_batch(const SystemTrajectory& traj,
                                     EstimatorConfig cfg,
                                     std::span<const double> x_stars,
                                     const FlowSolution* flow = nullptr,
                                     const RateSpec* true_rate = nullptr);

}  // namespace mfspike
