#include "oracles.hpp"

#include <cmath>

namespace oracle {

double simpson(const std::function<double(double)>& f, double a, double b,
               int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i)
    s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double riemann(const std::function<double(double)>& f, double a, double b,
               double dt) {
  double s = 0.0;
  for (double t = a; t < b; t += dt) s += f(t) * std::min(dt, b - t);
  return s;
}

DiscreteRun discretized_system(const mfspike::ModelSpec& model, double dt,
                               std::mt19937_64& rng) {
  const int n = model.n;
  std::vector<double> x(static_cast<std::size_t>(n), model.x0);
  std::vector<double> rates(static_cast<std::size_t>(n), 0.0);
  DiscreteRun run;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto steps = static_cast<std::uint64_t>(model.horizon / dt);
  const double n_inv = 1.0 / n;
  for (std::uint64_t s = 0; s < steps; ++s) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      rates[static_cast<std::size_t>(i)] = model.rate.f(x[static_cast<std::size_t>(i)]);
      total += rates[static_cast<std::size_t>(i)];
    }
    const double u = unif(rng);
    if (u < total * dt) {
      // Attribute the spike proportionally to the individual rates.
      double pick = unif(rng) * total;
      int j = 0;
      for (; j < n - 1; ++j) {
        pick -= rates[static_cast<std::size_t>(j)];
        if (pick <= 0.0) break;
      }
      const double w = model.weights.sample(rng);
      for (int i = 0; i < n; ++i)
        if (i != j) x[static_cast<std::size_t>(i)] += w * n_inv;
      ++run.event_count;
      if (run.first_event_time < 0.0)
        run.first_event_time = static_cast<double>(s + 1) * dt;
    }
    // Exact decay for the linear drift, Euler otherwise.
    if (model.drift.is_linear_decay()) {
      const double decay = std::exp(-dt);
      for (double& v : x) v *= decay;
    } else {
      for (double& v : x) v += model.drift.b(v) * dt;
    }
  }
  run.terminal = std::move(x);
  return run;
}

}  // namespace oracle
