#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mfspike::checks {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double elapsed_s = 0.0;
};

// Equilibria of the two reference systems, to 1e-3.
CheckResult check_equilibria();

// Linear-drift shared-accumulator path against the general path on identical
// randomness: events identical, potentials to 1e-9 (n = 500, T = 5).
CheckResult check_fast_path_equivalence();

// Single full-scale run: |estimate - f(x*)| within `threshold` at all nine
// grid points of the bounded-rate system.
CheckResult check_fig1(int n, double threshold, std::uint64_t seed = 12345);

// Per-neuron occupation near 1 / F(0) = 2 at x* = 0 within rel_tol.
CheckResult check_occupation_limit(int n, double rel_tol,
                                   std::uint64_t seed = 12345);

// Fitted log-log MSE slope within +-0.2 of -2/3.
CheckResult check_risk_slope(const std::vector<int>& n_values, int replicates,
                             std::uint64_t seed = 12345, int threads = 0);

// Standardized errors: variance within 25% of kappa^2 and Anderson-Darling
// p > 0.01 (n = 5000, h = n^{-0.45}, R = 200 by default).
CheckResult check_clt(int n, int replicates, std::uint64_t seed = 12345,
                      int threads = 0);

// E[sup_t |V|^2] spread below a factor 2 across n in {1000, 4000, 16000}.
CheckResult check_strong_approx(std::uint64_t seed = 12345, int threads = 0);

// Extinction fraction >= 60% for w = 1/2 and <= 40% for w = 2 at n = 1000.
CheckResult check_extinction(int seeds, std::uint64_t seed = 12345,
                             int threads = 0);

// Decomposition identity |(estimate - f(x*)) A_N - (M + B)| residual <= 1e-9
// on a batch of validation runs.
CheckResult check_decomposition(std::uint64_t seed = 12345);

// Across-seed variance of the partial estimator nonincreasing in gamma.
CheckResult check_partial_ordering(int n, const std::vector<int>& gammas,
                                   int seeds, std::uint64_t seed = 12345,
                                   int threads = 0);

// Fixture: synthetic exact power-law risk rows must fit slope -2/3.
CheckResult check_risk_fixture();

}  // namespace mfspike::checks
