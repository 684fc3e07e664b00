#include "mfspike/config.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace mfspike {

namespace {

using nlohmann::json;

[[noreturn]] void fail_key(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config: key '" + key + "': " + why);
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line number for a usable diagnostic.
    std::size_t line = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw std::invalid_argument("config: JSON parse error at line " +
                                std::to_string(line) + ": " + e.what());
  }
}

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key)) fail_key(key, "missing");
  if (!j.at(key).is_number()) fail_key(key, "must be a number");
  return j.at(key).get<double>();
}

std::string require_string(const json& j, const std::string& key) {
  if (!j.contains(key)) fail_key(key, "missing");
  if (!j.at(key).is_string()) fail_key(key, "must be a string");
  return j.at(key).get<std::string>();
}

DriftSpec parse_drift(const json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "linear-decay") return DriftSpec::linear_decay();
  fail_key("drift.kind", "unknown drift '" + kind + "'");
}

RateSpec parse_rate(const json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "two-minus-gauss") return RateSpec::two_minus_gauss();
  if (kind == "log1p") return RateSpec::log1p_rate();
  if (kind == "constant") {
    if (!j.contains("params") || !j.at("params").contains("lambda"))
      fail_key("rate.params.lambda", "missing for constant rate");
    return RateSpec::constant(j.at("params").at("lambda").get<double>());
  }
  fail_key("rate.kind", "unknown rate '" + kind + "'");
}

WeightLaw parse_weights(const json& j) {
  const std::string kind = require_string(j, "kind");
  if (kind == "uniform")
    return WeightLaw::uniform(require_number(j, "a"), require_number(j, "b"));
  if (kind == "point") return WeightLaw::point(require_number(j, "value"));
  fail_key("weights.kind", "unknown weight law '" + kind + "'");
}

KernelSpec parse_kernel(const json& j) {
  const std::string shape = require_string(j, "shape");
  int order = 0;
  if (j.contains("order")) order = j.at("order").get<int>();
  return build_kernel(shape, order);
}

}  // namespace

ModelConfig parse_model_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  ModelConfig cfg;
  if (!j.contains("drift")) fail_key("drift", "missing");
  if (!j.contains("rate")) fail_key("rate", "missing");
  if (!j.contains("weights")) fail_key("weights", "missing");
  cfg.model.drift = parse_drift(j.at("drift"));
  cfg.model.rate = parse_rate(j.at("rate"));
  cfg.model.weights = parse_weights(j.at("weights"));
  const double n = require_number(j, "n");
  if (n < 1 || n != std::floor(n))
    fail_key("n", "must be a positive integer (n >= 1)");
  cfg.model.n = static_cast<int>(n);
  cfg.model.x0 = require_number(j, "x0");
  cfg.model.horizon = require_number(j, "horizon");
  if (!(cfg.model.horizon > 0.0)) fail_key("horizon", "must be > 0");
  if (j.contains("kernel")) cfg.kernel = parse_kernel(j.at("kernel"));
  if (j.contains("flow") && j.at("flow").contains("search")) {
    const auto& s = j.at("flow").at("search");
    if (!s.is_array() || s.size() != 2)
      fail_key("flow.search", "must be [lo, hi]");
    cfg.equilibria_search = {s[0].get<double>(), s[1].get<double>()};
  }
  cfg.model.validate();
  return cfg;
}

std::string model_config_to_json(const ModelSpec& model,
                                 const KernelSpec* kernel) {
  json j;
  if (model.drift.kind == "custom")
    throw std::invalid_argument("config: custom drift is not serializable");
  j["drift"]["kind"] = model.drift.kind;
  if (model.rate.kind == "custom")
    throw std::invalid_argument("config: custom rate is not serializable");
  j["rate"]["kind"] = model.rate.kind;
  if (model.rate.kind == "constant")
    j["rate"]["params"]["lambda"] = model.rate.f(0.0);
  if (model.weights.kind == "uniform") {
    j["weights"]["kind"] = "uniform";
    j["weights"]["a"] = model.weights.a;
    j["weights"]["b"] = model.weights.b;
  } else if (model.weights.kind == "point") {
    j["weights"]["kind"] = "point";
    j["weights"]["value"] = model.weights.value;
  } else {
    throw std::invalid_argument("config: custom weights are not serializable");
  }
  j["n"] = model.n;
  j["x0"] = model.x0;
  j["horizon"] = model.horizon;
  if (kernel) {
    j["kernel"]["shape"] = to_string(kernel->shape);
    j["kernel"]["order"] = kernel->order;
  }
  return j.dump(2);
}

double EstimateConfig::resolve_bandwidth(int n) const {
  if (bandwidth_exponent > 0.0)
    return bandwidth_c * std::pow(static_cast<double>(n), -bandwidth_exponent);
  return bandwidth_value;
}

EstimateConfig parse_estimate_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  EstimateConfig cfg;
  if (!j.contains("kernel")) fail_key("kernel", "missing");
  cfg.kernel = parse_kernel(j.at("kernel"));
  if (!j.contains("bandwidth")) fail_key("bandwidth", "missing");
  const auto& bw = j.at("bandwidth");
  if (bw.is_number()) {
    cfg.bandwidth_value = bw.get<double>();
    if (!(cfg.bandwidth_value > 0.0)) fail_key("bandwidth", "must be > 0");
  } else if (bw.is_object()) {
    cfg.bandwidth_c = require_number(bw, "c");
    cfg.bandwidth_exponent = require_number(bw, "exponent");
    if (!(cfg.bandwidth_exponent > 0.0 && cfg.bandwidth_exponent < 0.5))
      fail_key("bandwidth.exponent", "must lie in (0, 1/2)");
  } else {
    fail_key("bandwidth", "must be a number or {c, exponent}");
  }
  if (j.contains("x_stars")) {
    if (!j.at("x_stars").is_array()) fail_key("x_stars", "must be an array");
    for (const auto& v : j.at("x_stars")) cfg.x_stars.push_back(v.get<double>());
  }
  if (j.contains("epsilon")) {
    cfg.epsilon = j.at("epsilon").get<double>();
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
      fail_key("epsilon", "must lie in (0, 1)");
  }
  if (j.contains("observed")) {
    const auto& o = j.at("observed");
    cfg.observed = {{static_cast<std::uint32_t>(require_number(o, "first")),
                     static_cast<std::uint32_t>(require_number(o, "count"))}};
  }
  return cfg;
}

PlanConfig parse_plan_config(const std::string& json_text) {
  const json j = parse_text(json_text);
  PlanConfig cfg;
  cfg.experiment = require_string(j, "experiment");
  if (j.contains("n")) cfg.n = j.at("n").get<int>();
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
  if (j.contains("n_values"))
    for (const auto& v : j.at("n_values")) cfg.n_values.push_back(v.get<int>());
  if (j.contains("bandwidth")) {
    const auto& bw = j.at("bandwidth");
    cfg.bandwidth_c = require_number(bw, "c");
    cfg.bandwidth_exponent = require_number(bw, "exponent");
  }
  if (j.contains("replicates")) cfg.replicates = j.at("replicates").get<int>();
  if (j.contains("x_stars"))
    for (const auto& v : j.at("x_stars")) cfg.x_stars.push_back(v.get<double>());
  if (j.contains("gammas"))
    for (const auto& v : j.at("gammas")) cfg.gammas.push_back(v.get<int>());
  if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<int>();
  return cfg;
}

}  // namespace mfspike
