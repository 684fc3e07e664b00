#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfspike/estimator.hpp"
#include "mfspike/experiments.hpp"
#include "mfspike/model.hpp"

namespace mfspike {

// Model configuration, documented key set:
//   drift.kind                      "linear-decay"
//   rate.kind, rate.params          "two-minus-gauss" | "log1p" | "constant"
//   weights.kind, weights.a/b/value "uniform" | "point"
//   n, x0, horizon
//   kernel.shape, kernel.order      "rectangular" | "smooth-bump" | "higher-order"
struct ModelConfig {
  ModelSpec model;
  std::optional<KernelSpec> kernel;
  std::optional<std::pair<double, double>> equilibria_search;
};

ModelConfig parse_model_config(const std::string& json_text);
// Round-trip of built-in specs; throws for custom callables.
std::string model_config_to_json(const ModelSpec& model,
                                 const KernelSpec* kernel = nullptr);

struct EstimateConfig {
  KernelSpec kernel;
  // Either a fixed value or c * n^{-exponent} resolved against the model n.
  double bandwidth_value = 0.0;
  double bandwidth_c = 1.0;
  double bandwidth_exponent = 0.0;  // 0 -> fixed value
  std::vector<double> x_stars;
  double epsilon = 0.1;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> observed;  // first,count

  double resolve_bandwidth(int n) const;
};

EstimateConfig parse_estimate_config(const std::string& json_text);

struct PlanConfig {
  std::string experiment;  // fig1 | fig3 | fig4 | partial | risk | clt | risk-fixture
  std::optional<int> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  // risk / clt
  std::vector<int> n_values;
  double bandwidth_c = 1.0;
  double bandwidth_exponent = 1.0 / 3.0;
  int replicates = 0;
  std::vector<double> x_stars;
  // partial
  std::vector<int> gammas;
  int seeds = 20;
};

PlanConfig parse_plan_config(const std::string& json_text);

}  // namespace mfspike
