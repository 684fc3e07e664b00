#include "mfspike/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfspike/ode.hpp"
#include "mfspike/quadrature.hpp"
#include "mfspike/rng.hpp"

namespace mfspike {

namespace {

double drift_flow_value(const DriftSpec& drift, double x, double dt,
                        double rel_tol = 1e-12) {
  if (dt == 0.0) return x;
  if (drift.flow) return drift.flow(x, dt);
  OdeOptions opts;
  opts.rel_tol = rel_tol;
  opts.abs_tol = rel_tol * 1e-2;
  return integrate_ode_final(
      [&drift](double, double v) { return drift.b(v); }, 0.0, dt, x, opts);
}

// Shared-accumulator state for b(x) = -x: X_i(t) = exp(-t) (a_i + s).
struct FastSim {
  std::vector<double> a;
  double s = 0.0;
  double n_inv = 1.0;

  double potential(std::uint32_t i, double t) const {
    return std::exp(-t) * (a[i] + s);
  }
  void apply(std::uint32_t j, double u, double t) {
    const double delta = std::exp(t) * u * n_inv;
    s += delta;
    a[j] -= delta;  // spiker excluded from its own jump
  }
  void fill(double t, std::vector<double>& out) const {
    const double e = std::exp(-t);
    out.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = e * (a[i] + s);
  }
};

// Explicit per-neuron state; drift integrated between events.
struct GeneralSim {
  const DriftSpec* drift = nullptr;
  std::vector<double> x;
  double t_last = 0.0;
  double n_inv = 1.0;

  double potential(std::uint32_t i, double t) const {
    return drift_flow_value(*drift, x[i], t - t_last);
  }
  void advance(double t) {
    for (double& v : x) v = drift_flow_value(*drift, v, t - t_last);
    t_last = t;
  }
  void apply(std::uint32_t j, double u, double t) {
    advance(t);
    const double delta = u * n_inv;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (i != j) x[i] += delta;
  }
  void fill(double t, std::vector<double>& out) const {
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      out[i] = drift_flow_value(*drift, x[i], t - t_last);
  }
};

}  // namespace

SystemTrajectory simulate(const ModelSpec& model, std::uint64_t seed,
                          const SimOptions& opts) {
  model.validate();
  const int n = model.n;
  const double horizon = model.horizon;

  bool fast = false;
  switch (opts.path) {
    case SimPath::automatic:
      fast = model.drift.is_linear_decay();
      break;
    case SimPath::fast_linear:
      if (!model.drift.is_linear_decay())
        throw std::invalid_argument(
            "simulate: fast path requires the linear-decay drift");
      fast = true;
      break;
    case SimPath::general:
      fast = false;
      break;
  }

  BoundStrategy strat = opts.bound;
  if (strat == BoundStrategy::automatic) {
    if (model.rate.upper_bound)
      strat = BoundStrategy::global_l;
    else if (model.rate.ray_monotone && model.drift.sign_opposing)
      strat = BoundStrategy::monotone_decay;
    else
      throw std::invalid_argument(
          "simulate: no valid thinning bound strategy for this model");
  }
  if (strat == BoundStrategy::global_l && !model.rate.upper_bound)
    throw std::invalid_argument("simulate: global-L bound requires f <= L");
  if (strat == BoundStrategy::monotone_decay &&
      !(model.rate.ray_monotone && model.drift.sign_opposing))
    throw std::invalid_argument(
        "simulate: monotone-decay bound requires a ray-monotone rate and a "
        "sign-opposing drift");
  if (strat == BoundStrategy::user && !opts.user_bound)
    throw std::invalid_argument("simulate: user strategy without user_bound");

  std::mt19937_64 loop_rng = make_engine(seed, rng_purpose::event_loop);
  std::mt19937_64 weight_rng = make_engine(seed, rng_purpose::weights);

  FastSim fs;
  GeneralSim gs;
  if (fast) {
    fs.a.assign(static_cast<std::size_t>(n), model.x0);
    fs.n_inv = 1.0 / n;
  } else {
    gs.drift = &model.drift;
    gs.x.assign(static_cast<std::size_t>(n), model.x0);
    gs.n_inv = 1.0 / n;
  }
  auto potential_of = [&](std::uint32_t i, double t) {
    return fast ? fs.potential(i, t) : gs.potential(i, t);
  };

  const bool uniform_pick = (strat == BoundStrategy::global_l);
  const double global_l = model.rate.upper_bound.value_or(0.0);
  std::vector<double> prefix;  // cumulative per-neuron bounds
  double lambda = 0.0;
  auto neuron_bound = [&](double x) {
    return strat == BoundStrategy::user ? opts.user_bound(x) : model.rate.f(x);
  };
  auto refresh_bounds = [&](double t) {
    if (uniform_pick) {
      lambda = static_cast<double>(n) * global_l;
      return;
    }
    prefix.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double b = neuron_bound(potential_of(i, t));
      if (!(b >= 0.0) || !std::isfinite(b))
        throw SimulationError("simulate: invalid per-neuron bound", t, 0);
      acc += b;
      prefix[static_cast<std::size_t>(i)] = acc;
    }
    lambda = acc;
  };
  refresh_bounds(0.0);

  std::vector<SpikeEvent> events;
  std::vector<double> snapshots;
  std::vector<double> probe_times = opts.probe_times;
  std::sort(probe_times.begin(), probe_times.end());
  std::erase_if(probe_times,
                [horizon](double p) { return p < 0.0 || p > horizon; });
  std::vector<double> probe_states;
  std::size_t probe_idx = 0;
  std::vector<double> scratch;
  auto record_probes_until = [&](double t) {
    if (opts.record != RecordLevel::probed) return;
    while (probe_idx < probe_times.size() && probe_times[probe_idx] <= t) {
      if (fast)
        fs.fill(probe_times[probe_idx], scratch);
      else
        gs.fill(probe_times[probe_idx], scratch);
      probe_states.insert(probe_states.end(), scratch.begin(), scratch.end());
      ++probe_idx;
    }
  };

  double t = 0.0;
  const double checkpoint_dt =
      uniform_pick ? std::numeric_limits<double>::infinity()
                   : opts.checkpoint_dt;
  double next_checkpoint = checkpoint_dt;

  while (t < horizon) {
    const double boundary = std::min(next_checkpoint, horizon);
    if (lambda <= 0.0) {
      record_probes_until(boundary);
      t = boundary;
      if (t >= horizon) break;
      refresh_bounds(t);
      next_checkpoint += checkpoint_dt;
      continue;
    }
    std::exponential_distribution<double> exp_dist(lambda);
    const double t_cand = t + exp_dist(loop_rng);
    if (t_cand >= boundary) {
      record_probes_until(boundary);
      t = boundary;
      if (t >= horizon) break;
      refresh_bounds(t);
      next_checkpoint += checkpoint_dt;
      continue;
    }
    record_probes_until(t_cand);
    t = t_cand;

    std::uint32_t j;
    double bound_j;
    if (uniform_pick) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      j = static_cast<std::uint32_t>(pick(loop_rng));
      bound_j = global_l;
    } else {
      std::uniform_real_distribution<double> pick(0.0, lambda);
      const double u = pick(loop_rng);
      j = static_cast<std::uint32_t>(
          std::upper_bound(prefix.begin(), prefix.end(), u) - prefix.begin());
      if (j >= static_cast<std::uint32_t>(n)) j = static_cast<std::uint32_t>(n - 1);
      bound_j = prefix[j] - (j > 0 ? prefix[j - 1] : 0.0);
    }

    const double xj = potential_of(j, t);
    const double fj = model.rate.f(xj);
    if (!std::isfinite(fj) || fj < 0.0)
      throw SimulationError(
          "simulate: rate evaluated to a negative or non-finite value", t,
          events.size());
    if (fj > bound_j * (1.0 + 1e-12) + 1e-300)
      throw SimulationError("simulate: dominating rate violated", t,
                            events.size());
    if (opts.validate_bounds) {
      double total = 0.0;
      for (int i = 0; i < n; ++i) total += model.rate.f(potential_of(i, t));
      if (total > lambda * (1.0 + 1e-12) + 1e-12)
        throw SimulationError("simulate: total rate exceeds Lambda", t,
                              events.size());
    }

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u_acc = unif(loop_rng);
    if (u_acc * bound_j < fj) {
      const double w = model.weights.sample(weight_rng);
      events.push_back({t, j, w, xj});
      if (events.size() > opts.event_cap)
        throw SimulationError("simulate: event cap exceeded (runaway regime)",
                              t, events.size());
      if (fast)
        fs.apply(j, w, t);
      else
        gs.apply(j, w, t);
      if (opts.record == RecordLevel::snapshots) {
        if (fast)
          fs.fill(t, scratch);
        else
          scratch = gs.x;
        snapshots.insert(snapshots.end(), scratch.begin(), scratch.end());
      }
      if (!uniform_pick) refresh_bounds(t);
    }
  }
  record_probes_until(horizon);
  if (!fast) gs.advance(horizon);

  SystemTrajectory traj;
  traj.model_ = model;
  traj.seed_ = seed;
  traj.record_ = opts.record;
  traj.fast_ = fast;
  traj.terminal_ = horizon;
  traj.events_ = std::move(events);
  traj.snapshots_ = std::move(snapshots);
  traj.probe_times_ = std::move(probe_times);
  traj.probe_states_ = std::move(probe_states);
  traj.finalize();
  return traj;
}

void SystemTrajectory::finalize() {
  const double n_inv = 1.0 / model_.n;
  s_prefix_.clear();
  own_.assign(static_cast<std::size_t>(model_.n), {});
  if (!fast_) return;
  s_prefix_.reserve(events_.size());
  std::vector<double> a(static_cast<std::size_t>(model_.n), model_.x0);
  double s = 0.0;
  for (std::size_t e = 0; e < events_.size(); ++e) {
    const SpikeEvent& ev = events_[e];
    const double delta = std::exp(ev.time) * ev.weight * n_inv;
    s += delta;
    a[ev.spiker] -= delta;
    s_prefix_.push_back(s);
    own_[ev.spiker].push_back({static_cast<std::uint32_t>(e), a[ev.spiker]});
  }
}

double SystemTrajectory::s_after(std::size_t event_idx) const {
  return s_prefix_[event_idx];
}

double SystemTrajectory::potential(std::uint32_t neuron, double t,
                                   bool left_limit) const {
  if (neuron >= static_cast<std::uint32_t>(model_.n))
    throw std::out_of_range("potential: neuron index out of range");
  if (t < 0.0 || t > terminal_ + 1e-12)
    throw std::out_of_range("potential: time outside [0, terminal]");
  return fast_ ? potential_fast(neuron, t, left_limit)
               : potential_general(neuron, t, left_limit);
}

namespace {

// Index of the last event included at time t (-1 when none).
std::ptrdiff_t last_event_index(const std::vector<SpikeEvent>& events, double t,
                                bool left_limit) {
  auto cmp = [](const SpikeEvent& e, double v) { return e.time < v; };
  auto it = left_limit
                ? std::lower_bound(events.begin(), events.end(), t, cmp)
                : std::upper_bound(events.begin(), events.end(), t,
                                   [](double v, const SpikeEvent& e) {
                                     return v < e.time;
                                   });
  return static_cast<std::ptrdiff_t>(it - events.begin()) - 1;
}

}  // namespace

double SystemTrajectory::potential_fast(std::uint32_t neuron, double t,
                                        bool left) const {
  const std::ptrdiff_t idx = last_event_index(events_, t, left);
  const double s = idx >= 0 ? s_prefix_[static_cast<std::size_t>(idx)] : 0.0;
  double a = model_.x0;
  const auto& own = own_[neuron];
  // Last own event at or before idx.
  auto it = std::upper_bound(
      own.begin(), own.end(), idx,
      [](std::ptrdiff_t v, const OwnEvent& oe) {
        return v < static_cast<std::ptrdiff_t>(oe.event_idx);
      });
  if (it != own.begin()) a = std::prev(it)->a_after;
  return std::exp(-t) * (a + s);
}

double SystemTrajectory::potential_general(std::uint32_t neuron, double t,
                                           bool left) const {
  const std::ptrdiff_t idx = last_event_index(events_, t, left);
  const double n_inv = 1.0 / model_.n;
  if (record_ == RecordLevel::snapshots && idx >= 0) {
    const double base =
        snapshots_[static_cast<std::size_t>(idx) * model_.n + neuron];
    return drift_flow_value(model_.drift, base,
                            t - events_[static_cast<std::size_t>(idx)].time);
  }
  // Sequential replay of this neuron's potential from the initial condition.
  double x = model_.x0;
  double t_cur = 0.0;
  for (std::ptrdiff_t e = 0; e <= idx; ++e) {
    const SpikeEvent& ev = events_[static_cast<std::size_t>(e)];
    x = drift_flow_value(model_.drift, x, ev.time - t_cur);
    if (ev.spiker != neuron) x += ev.weight * n_inv;
    t_cur = ev.time;
  }
  return drift_flow_value(model_.drift, x, t - t_cur);
}

SystemTrajectory SystemTrajectory::from_events(
    ModelSpec model, std::vector<SpikeEvent> events, double terminal_time,
    std::uint64_t seed, RecordLevel record, std::vector<double> snapshots,
    std::vector<double> probe_times, std::vector<double> probe_states) {
  model.validate();
  for (std::size_t i = 1; i < events.size(); ++i)
    if (!(events[i].time > events[i - 1].time))
      throw std::invalid_argument("from_events: times must strictly increase");
  for (const SpikeEvent& e : events) {
    if (e.spiker >= static_cast<std::uint32_t>(model.n))
      throw std::invalid_argument("from_events: spiker index out of range");
    if (e.weight == 0.0)
      throw std::invalid_argument("from_events: zero weight event");
  }
  SystemTrajectory traj;
  traj.model_ = std::move(model);
  traj.seed_ = seed;
  traj.record_ = record;
  traj.fast_ = traj.model_.drift.is_linear_decay();
  traj.terminal_ = terminal_time;
  traj.events_ = std::move(events);
  traj.snapshots_ = std::move(snapshots);
  traj.probe_times_ = std::move(probe_times);
  traj.probe_states_ = std::move(probe_states);
  traj.finalize();
  return traj;
}

std::uint32_t identify_spiker(std::span<const double> increments) {
  if (increments.empty())
    throw std::invalid_argument("identify_spiker: empty increment vector");
  std::size_t best = 0;
  double best_abs = std::abs(increments[0]);
  for (std::size_t i = 1; i < increments.size(); ++i) {
    const double v = std::abs(increments[i]);
    if (v < best_abs) {
      best = i;
      best_abs = v;
    }
  }
  std::size_t ties = 0;
  for (double v : increments)
    if (std::abs(v) == best_abs) ++ties;
  if (ties > 1)
    throw std::runtime_error("identify_spiker: ambiguous minimal increment");
  return static_cast<std::uint32_t>(best);
}

ExtinctionReport detect_extinction(const SystemTrajectory& traj,
                                   double quiet_horizon, double rate_epsilon) {
  const double horizon = traj.terminal_time();
  ExtinctionReport rep;
  rep.quiet_horizon = quiet_horizon > 0.0 ? quiet_horizon : 0.2 * horizon;
  rep.rate_epsilon =
      rate_epsilon > 0.0 ? rate_epsilon : 1e-6 * traj.model().n;
  if (!traj.events().empty()) rep.last_spike = traj.events().back().time;
  double total_rate = 0.0;
  for (int i = 0; i < traj.model().n; ++i)
    total_rate += traj.model().rate.f(
        traj.potential(static_cast<std::uint32_t>(i), horizon));
  rep.terminal_rate = total_rate;
  const bool quiet =
      !rep.last_spike || *rep.last_spike <= horizon - rep.quiet_horizon;
  rep.extinct = quiet && total_rate < rep.rate_epsilon;
  return rep;
}

ExtinctionBound extinction_lower_bound(int n, double r) {
  if (n < 1) throw std::invalid_argument("extinction_lower_bound: n >= 1");
  if (r < 0.0)
    throw std::invalid_argument("extinction_lower_bound: r must be >= 0");
  ExtinctionBound b;
  if (r == 0.0) return b;
  const double integral = integrate(
      [](double u) { return u == 0.0 ? 1.0 : std::log1p(u) / u; }, 0.0, r,
      1e-9, 1e-14);
  b.log_probability = -static_cast<double>(n) * integral;
  b.probability = std::exp(b.log_probability);
  return b;
}

LyapunovReport lyapunov_drift_check(
    std::span<const std::vector<double>> states, const ModelSpec& model) {
  if (!model.drift.is_linear_decay())
    throw std::invalid_argument(
        "lyapunov_drift_check: requires the linear-decay drift");
  if (model.weights.min_support() < 0.0)
    throw std::invalid_argument(
        "lyapunov_drift_check: requires a purely excitatory weight law");
  LyapunovReport rep;
  rep.max_excess = -std::numeric_limits<double>::infinity();
  const double n_real = static_cast<double>(model.n);
  for (const auto& x : states) {
    if (x.size() != static_cast<std::size_t>(model.n))
      throw std::invalid_argument("lyapunov_drift_check: state size mismatch");
    double v = 0.0;
    for (double xi : x) {
      if (xi < 0.0)
        throw std::invalid_argument(
            "lyapunov_drift_check: negative entries rejected");
      v += xi;
    }
    // Generator applied to V: drift part plus jump part integrated over nu.
    double gen = -v;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double fi = model.rate.f(x[i]);
      if (fi == 0.0) continue;
      auto v_increment = [&](double u) {
        double v_new = 0.0;
        for (std::size_t jj = 0; jj < x.size(); ++jj) {
          const double shift = jj == i ? 0.0 : u / n_real;
          v_new += std::abs(x[jj] + shift);
        }
        return v_new - v;
      };
      double jump;
      if (model.weights.kind == "uniform") {
        const double a = model.weights.a, b = model.weights.b;
        jump = integrate([&](double u) { return v_increment(u); }, a, b, 1e-10,
                         1e-14) /
               (b - a);
      } else if (model.weights.kind == "point") {
        jump = v_increment(model.weights.value);
      } else {
        throw std::invalid_argument(
            "lyapunov_drift_check: weight law must be uniform or point");
      }
      gen += fi * jump;
    }
    rep.generator_values.push_back(gen);
    rep.max_excess = std::max(rep.max_excess, gen - 0.5 * v);
  }
  rep.constant_c = std::max(0.0, rep.max_excess);
  return rep;
}

}  // namespace mfspike
