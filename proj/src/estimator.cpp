#include "mfspike/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "mfspike/ode.hpp"
#include "mfspike/quadrature.hpp"

namespace mfspike {

ObservedSet ObservedSet::range(std::uint32_t first, std::uint32_t count) {
  ObservedSet s;
  s.full_ = false;
  s.idx_.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) s.idx_.push_back(first + i);
  return s;
}

ObservedSet ObservedSet::from_indices(std::vector<std::uint32_t> indices) {
  ObservedSet s;
  s.full_ = false;
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  s.idx_ = std::move(indices);
  return s;
}

std::vector<char> ObservedSet::bitmap(int n) const {
  std::vector<char> map(static_cast<std::size_t>(n), full_ ? 1 : 0);
  if (!full_) {
    for (std::uint32_t i : idx_) {
      if (i >= static_cast<std::uint32_t>(n))
        throw std::invalid_argument("observed set: index out of range");
      map[i] = 1;
    }
  }
  return map;
}

void EstimatorConfig::validate() const {
  if (!(bandwidth > 0.0))
    throw std::invalid_argument("estimator: bandwidth must be > 0");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("estimator: epsilon must lie in (0, 1)");
  if (!observed.is_full() && observed.indices().empty())
    throw std::invalid_argument("estimator: observed subset is empty");
  if (horizon && !(*horizon > 0.0))
    throw std::invalid_argument("estimator: horizon must be > 0");
}

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

// Time sub-interval of [t0, t1] during which exp(-t) * c lies in [lo, hi].
// The path is monotone toward zero, so the answer is a single interval.
bool decay_window_times(double c, double lo, double hi, double t0, double t1,
                        double& a, double& b) {
  if (c == 0.0) {
    if (lo <= 0.0 && 0.0 <= hi) {
      a = t0;
      b = t1;
      return b > a;
    }
    return false;
  }
  double t_enter, t_exit;
  if (c > 0.0) {
    if (hi <= 0.0) return false;
    t_enter = std::exp(-t0) * c <= hi ? t0 : std::log(c / hi);
    if (lo <= 0.0)
      t_exit = t1;
    else
      t_exit = std::exp(-t1) * c >= lo ? t1 : std::log(c / lo);
  } else {
    if (lo >= 0.0) return false;
    t_enter = std::exp(-t0) * c >= lo ? t0 : std::log(c / lo);
    if (hi >= 0.0)
      t_exit = t1;
    else
      t_exit = std::exp(-t1) * c <= hi ? t1 : std::log(c / hi);
  }
  a = std::max(t0, t_enter);
  b = std::min(t1, t_exit);
  return b > a;
}

// Fenwick tree over value ranks; supports point add and prefix count.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t rank, int delta) {
    for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1))
      tree_[i] += delta;
  }
  // number of elements with rank < r
  long long count_below(std::size_t r) const {
    long long s = 0;
    for (std::size_t i = r; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<long long> tree_;
};

struct LineIntegrals {
  double occupation = 0.0;
  double weighted = 0.0;
  std::vector<double> per_neuron;
};

// Observation clip: events up to T_obs, final segment to T_obs.
double observation_end(const SystemTrajectory& traj,
                       const EstimatorConfig& cfg) {
  const double t_end = cfg.horizon.value_or(traj.terminal_time());
  if (t_end > traj.terminal_time() + 1e-12)
    throw std::invalid_argument(
        "estimator: observation window exceeds trajectory horizon");
  return std::min(t_end, traj.terminal_time());
}

// Fast linear-drift path. Replays the shared-accumulator representation and
// touches, per segment, only neurons whose potential can visit the kernel
// support. For the rectangular kernel with no weight function the bulk of the
// occupation is counted through a Fenwick tree instead of per neuron.
LineIntegrals line_integrals_fast(const SystemTrajectory& traj,
                                  const EstimatorConfig& cfg,
                                  const std::function<double(double)>* weight,
                                  bool want_per_neuron) {
  const int n = traj.model().n;
  const double h = cfg.bandwidth;
  const double w_lo = cfg.x_star - cfg.kernel.support * h;
  const double w_hi = cfg.x_star + cfg.kernel.support * h;
  const double inv2h = 0.5 / h;  // rectangular kernel height Q_h = 1/(2h)
  const bool rect = cfg.kernel.shape == KernelShape::rectangular;
  const double t_end = observation_end(traj, cfg);
  const bool aggregate =
      rect && weight == nullptr && !want_per_neuron && cfg.observed.is_full();

  LineIntegrals out;
  if (want_per_neuron) out.per_neuron.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<char> bitmap;
  if (!cfg.observed.is_full()) bitmap = cfg.observed.bitmap(n);
  auto observed = [&](std::uint32_t i) {
    return bitmap.empty() || bitmap[i];
  };

  // Rank table over every accumulator constant the replay will see.
  std::vector<double> values;
  values.push_back(traj.a_initial());
  for (int i = 0; i < n; ++i)
    for (const auto& oe : traj.own_events(static_cast<std::uint32_t>(i)))
      values.push_back(oe.a_after);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  auto rank_lt = [&values](double v) {
    return static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), v) - values.begin());
  };
  auto rank_leq = [&values](double v) {
    return static_cast<std::size_t>(
        std::upper_bound(values.begin(), values.end(), v) - values.begin());
  };

  std::vector<double> a(static_cast<std::size_t>(n), traj.a_initial());
  std::vector<std::size_t> own_pos(static_cast<std::size_t>(n), 0);
  double s = 0.0;
  std::multiset<std::pair<double, std::uint32_t>> sorted;
  Fenwick fenwick(values.size());
  for (int i = 0; i < n; ++i)
    sorted.insert({traj.a_initial(), static_cast<std::uint32_t>(i)});
  if (aggregate) fenwick.add(rank_lt(traj.a_initial()), n);

  auto neuron_contribution = [&](std::uint32_t i, double c, double t0,
                                 double t1) {
    double ta, tb;
    if (!decay_window_times(c, w_lo, w_hi, t0, t1, ta, tb)) return;
    double occ, wgt = 0.0;
    if (rect) {
      occ = (tb - ta) * inv2h;
      if (weight)
        wgt = inv2h * integrate(
                          [&](double t) {
                            return (*weight)(std::exp(-t) * c);
                          },
                          ta, tb, 1e-8, 1e-300, 24);
    } else {
      occ = integrate(
          [&](double t) {
            return cfg.kernel.scaled(std::exp(-t) * c - cfg.x_star, h);
          },
          ta, tb, 1e-8, 1e-300, 24);
      if (weight)
        wgt = integrate(
            [&](double t) {
              const double x = std::exp(-t) * c;
              return (*weight)(x)*cfg.kernel.scaled(x - cfg.x_star, h);
            },
            ta, tb, 1e-8, 1e-300, 24);
    }
    out.occupation += occ;
    out.weighted += wgt;
    if (want_per_neuron) out.per_neuron[i] += occ;
  };

  auto process_segment = [&](double t0, double t1) {
    if (!(t1 > t0)) return;
    // Range of accumulator constants that can touch the support in [t0, t1].
    const double c_lo =
        w_lo >= 0.0 ? std::exp(t0) * w_lo : std::exp(t1) * w_lo;
    const double c_hi =
        w_hi >= 0.0 ? std::exp(t1) * w_hi : std::exp(t0) * w_hi;
    if (!(c_lo <= c_hi)) return;
    if (aggregate) {
      // Constants fully inside the window for the whole segment.
      const double q_lo =
          w_lo >= 0.0 ? std::exp(t1) * w_lo : std::exp(t0) * w_lo;
      const double q_hi =
          w_hi >= 0.0 ? std::exp(t0) * w_hi : std::exp(t1) * w_hi;
      if (q_lo <= q_hi) {
        const long long inside = fenwick.count_below(rank_leq(q_hi - s)) -
                                 fenwick.count_below(rank_lt(q_lo - s));
        out.occupation += static_cast<double>(inside) * (t1 - t0) * inv2h;
        // Boundary slivers handled per neuron.
        auto it = sorted.lower_bound({c_lo - s, 0});
        const auto stop_low = sorted.lower_bound({q_lo - s, 0});
        for (; it != stop_low; ++it)
          neuron_contribution(it->second, it->first + s, t0, t1);
        it = sorted.upper_bound(
            {q_hi - s, std::numeric_limits<std::uint32_t>::max()});
        const auto stop_high = sorted.upper_bound(
            {c_hi - s, std::numeric_limits<std::uint32_t>::max()});
        for (; it != stop_high; ++it)
          neuron_contribution(it->second, it->first + s, t0, t1);
        return;
      }
    }
    auto it = sorted.lower_bound({c_lo - s, 0});
    const auto stop = sorted.upper_bound(
        {c_hi - s, std::numeric_limits<std::uint32_t>::max()});
    for (; it != stop; ++it) {
      if (!observed(it->second)) continue;
      neuron_contribution(it->second, it->first + s, t0, t1);
    }
  };

  double t_prev = 0.0;
  const auto& events = traj.events();
  for (std::size_t e = 0; e < events.size() && events[e].time <= t_end; ++e) {
    process_segment(t_prev, events[e].time);
    const std::uint32_t sp = events[e].spiker;
    const double a_new = traj.own_events(sp)[own_pos[sp]].a_after;
    ++own_pos[sp];
    sorted.erase(sorted.find({a[sp], sp}));
    sorted.insert({a_new, sp});
    if (aggregate) {
      fenwick.add(rank_lt(a[sp]), -1);
      fenwick.add(rank_lt(a_new), +1);
    }
    a[sp] = a_new;
    s = traj.s_after(e);
    t_prev = events[e].time;
  }
  process_segment(t_prev, t_end);
  return out;
}

// General path: sequential replay of the full state with per-segment
// monotone range checks and quadrature on the in-support stretch.
LineIntegrals line_integrals_general(
    const SystemTrajectory& traj, const EstimatorConfig& cfg,
    const std::function<double(double)>* weight, bool want_per_neuron) {
  const int n = traj.model().n;
  const DriftSpec& drift = traj.model().drift;
  const double h = cfg.bandwidth;
  const double w_lo = cfg.x_star - cfg.kernel.support * h;
  const double w_hi = cfg.x_star + cfg.kernel.support * h;
  const bool rect = cfg.kernel.shape == KernelShape::rectangular;
  const double inv2h = 0.5 / h;
  const double t_end = observation_end(traj, cfg);

  LineIntegrals out;
  if (want_per_neuron) out.per_neuron.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<char> bitmap = cfg.observed.bitmap(n);

  std::vector<double> x(static_cast<std::size_t>(n), traj.model().x0);

  auto segment_neuron = [&](std::uint32_t i, double x_start, double t0,
                            double t1) {
    const double dt = t1 - t0;
    // Dense path over the segment; closed-form flow when available.
    OdeSolution dense;
    const bool closed = drift.has_closed_form_flow();
    if (!closed) {
      OdeOptions opts;
      opts.rel_tol = 1e-12;
      opts.abs_tol = 1e-14;
      dense = integrate_ode(
          [&drift](double, double v) { return drift.b(v); }, 0.0, dt, x_start,
          opts);
      if (!dense.ok) throw std::runtime_error(dense.error);
    }
    auto path = [&](double tau) {
      return closed ? drift.flow(x_start, tau) : dense.eval(tau);
    };
    const double x_end = path(dt);
    const double p_lo = std::min(x_start, x_end);
    const double p_hi = std::max(x_start, x_end);
    if (p_hi < w_lo || p_lo > w_hi) return;
    // Monotone path: bisect for the boundary crossing times.
    auto crossing = [&](double level) {
      double lo = 0.0, hi = dt;
      const bool up = x_end >= x_start;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((path(mid) < level) == up)
          lo = mid;
        else
          hi = mid;
      }
      return 0.5 * (lo + hi);
    };
    double ta = 0.0, tb = dt;
    const bool start_in = x_start >= w_lo && x_start <= w_hi;
    const bool end_in = x_end >= w_lo && x_end <= w_hi;
    if (!start_in) ta = crossing(x_start > w_hi ? w_hi : w_lo);
    if (!end_in) tb = crossing(x_end > w_hi ? w_hi : w_lo);
    if (!(tb > ta)) return;
    double occ, wgt = 0.0;
    if (rect) {
      occ = (tb - ta) * inv2h;
      if (weight)
        wgt = inv2h *
              integrate([&](double tau) { return (*weight)(path(tau)); }, ta,
                        tb, 1e-8, 1e-300, 24);
    } else {
      occ = integrate(
          [&](double tau) {
            return cfg.kernel.scaled(path(tau) - cfg.x_star, h);
          },
          ta, tb, 1e-8, 1e-300, 24);
      if (weight)
        wgt = integrate(
            [&](double tau) {
              const double v = path(tau);
              return (*weight)(v)*cfg.kernel.scaled(v - cfg.x_star, h);
            },
            ta, tb, 1e-8, 1e-300, 24);
    }
    out.occupation += occ;
    out.weighted += wgt;
    if (want_per_neuron) out.per_neuron[i] += occ;
  };

  auto process_segment = [&](double t0, double t1) {
    if (!(t1 > t0)) return;
    for (int i = 0; i < n; ++i) {
      if (!bitmap[static_cast<std::size_t>(i)]) continue;
      segment_neuron(static_cast<std::uint32_t>(i),
                     x[static_cast<std::size_t>(i)], t0, t1);
    }
  };

  double t_prev = 0.0;
  const double n_inv = 1.0 / n;
  for (const SpikeEvent& ev : traj.events()) {
    if (ev.time > t_end) break;
    process_segment(t_prev, ev.time);
    const double dt = ev.time - t_prev;
    for (int i = 0; i < n; ++i) {
      double& xi = x[static_cast<std::size_t>(i)];
      xi = drift_flow_value(drift, xi, dt);
      if (static_cast<std::uint32_t>(i) != ev.spiker)
        xi += ev.weight * n_inv;
    }
    t_prev = ev.time;
  }
  process_segment(t_prev, t_end);
  return out;
}

LineIntegrals kernel_line_integrals(const SystemTrajectory& traj,
                                    const EstimatorConfig& cfg,
                                    const std::function<double(double)>* weight,
                                    bool want_per_neuron) {
  cfg.validate();
  return traj.fast_path()
             ? line_integrals_fast(traj, cfg, weight, want_per_neuron)
             : line_integrals_general(traj, cfg, weight, want_per_neuron);
}

double kernel_numerator(const SystemTrajectory& traj,
                        const EstimatorConfig& cfg) {
  const double t_end = observation_end(traj, cfg);
  std::vector<char> bitmap;
  if (!cfg.observed.is_full()) bitmap = cfg.observed.bitmap(traj.model().n);
  double num = 0.0;
  for (const SpikeEvent& ev : traj.events()) {
    if (ev.time > t_end) break;
    if (!bitmap.empty() && !bitmap[ev.spiker]) continue;
    num += cfg.kernel.scaled(ev.pre_potential - cfg.x_star, cfg.bandwidth);
  }
  return num;
}

}  // namespace

double occupation_integral(const SystemTrajectory& traj,
                           const EstimatorConfig& cfg) {
  return kernel_line_integrals(traj, cfg, nullptr, false).occupation;
}

EstimateReport estimate_rate(const SystemTrajectory& traj,
                             const EstimatorConfig& cfg) {
  cfg.validate();
  LineIntegrals li = kernel_line_integrals(traj, cfg, nullptr, cfg.per_neuron);
  EstimateReport rep;
  rep.numerator = kernel_numerator(traj, cfg);
  rep.denominator = li.occupation;
  rep.neuron_occupation = std::move(li.per_neuron);
  if (rep.denominator != 0.0) {
    rep.estimate = rep.numerator / rep.denominator;
  } else {
    rep.estimate = 0.0;  // 0/0 := 0
    rep.degenerate = true;
  }
  if (cfg.kernel.shape == KernelShape::rectangular)
    rep.warnings.push_back(
        "rectangular kernel is not Lipschitz; the asymptotic guarantees "
        "assume a smooth kernel");
  return rep;
}

OccupationComparison compare_occupation(const SystemTrajectory& traj,
                                        const FlowSolution& flow,
                                        const EstimatorConfig& cfg) {
  cfg.validate();
  const double t_end = observation_end(traj, cfg);
  const double h = cfg.bandwidth;
  const double w_lo = cfg.x_star - cfg.kernel.support * h;
  const double w_hi = cfg.x_star + cfg.kernel.support * h;

  OccupationComparison cmp;
  const double occ = occupation_integral(traj, cfg);
  cmp.a_n = occ / static_cast<double>(cfg.observed.size(traj.model().n));

  double a_lim = 0.0;
  if (flow.monotone()) {
    const double x_begin = flow.x0();
    const double x_end = flow.eval(t_end);
    const double lo = std::min(x_begin, x_end);
    const double hi = std::max(x_begin, x_end);
    const double v_lo = std::max(w_lo, lo);
    const double v_hi = std::min(w_hi, hi);
    if (v_lo < v_hi) {
      double t_in, t_out;
      if (flow.increasing()) {
        t_in = v_lo <= x_begin ? 0.0 : invert_flow(flow, v_lo);
        t_out = v_hi >= x_end ? t_end : invert_flow(flow, v_hi);
      } else {
        t_in = v_hi >= x_begin ? 0.0 : invert_flow(flow, v_hi);
        t_out = v_lo <= x_end ? t_end : invert_flow(flow, v_lo);
      }
      if (t_out > t_in) {
        if (cfg.kernel.shape == KernelShape::rectangular)
          a_lim = (t_out - t_in) * 0.5 / h;
        else
          a_lim = integrate(
              [&](double s) {
                return cfg.kernel.scaled(flow.eval(s) - cfg.x_star, h);
              },
              t_in, t_out, 1e-8, 1e-300, 24);
      }
    }
  } else {
    a_lim = integrate(
        [&](double s) {
          return cfg.kernel.scaled(flow.eval(s) - cfg.x_star, h);
        },
        0.0, t_end, 1e-8, 1e-300, 30);
  }
  cmp.a_lim = a_lim;
  if (a_lim == 0.0) {
    cmp.degenerate = true;
    cmp.omega = false;
  } else {
    cmp.omega = std::abs(cmp.a_n / a_lim - 1.0) <= cfg.epsilon;
  }
  return cmp;
}

DecompositionReport error_decomposition(const SystemTrajectory& traj,
                                        const EstimatorConfig& cfg,
                                        const RateSpec& true_rate) {
  cfg.validate();
  if (!cfg.observed.is_full())
    throw std::invalid_argument(
        "error_decomposition: defined for full observation");
  const double n_real = static_cast<double>(traj.model().n);
  const std::function<double(double)> f = true_rate.f;
  LineIntegrals li = kernel_line_integrals(traj, cfg, &f, false);
  const double num = kernel_numerator(traj, cfg);
  const double f_star = true_rate.f(cfg.x_star);

  DecompositionReport rep;
  rep.a_n = li.occupation / n_real;
  rep.martingale = (num - li.weighted) / n_real;
  rep.bias = (li.weighted - f_star * li.occupation) / n_real;
  rep.true_value = f_star;
  rep.estimate = li.occupation != 0.0 ? num / li.occupation : 0.0;
  if (rep.a_n > 0.0) {
    rep.recomposed_error = (rep.martingale + rep.bias) / rep.a_n;
    rep.identity_residual =
        (rep.estimate - f_star) - rep.recomposed_error;
  }
  return rep;
}

EstimateReport estimate_rate_validated(const SystemTrajectory& traj,
                                       const EstimatorConfig& cfg,
                                       const FlowSolution& flow,
                                       const RateSpec& true_rate) {
  EstimateReport rep = estimate_rate(traj, cfg);
  EstimateDiagnostics diag;
  const OccupationComparison cmp = compare_occupation(traj, flow, cfg);
  diag.a_n = cmp.a_n;
  diag.a_lim = cmp.a_lim;
  diag.omega = cmp.omega;
  diag.degenerate_limit = cmp.degenerate;
  rep.omega_flag = cmp.omega;
  if (cfg.observed.is_full()) {
    const DecompositionReport dec = error_decomposition(traj, cfg, true_rate);
    diag.martingale = dec.martingale;
    diag.bias = dec.bias;
    diag.recomposed_error = dec.recomposed_error;
    diag.decomposition_available = true;
  }
  rep.diagnostics = diag;
  return rep;
}

StrongApproxReport strong_approx_diag(const SystemTrajectory& traj,
                                      const FlowSolution& flow,
                                      std::span<const double> probes) {
  const int n = traj.model().n;
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  StrongApproxReport rep;
  rep.probes.assign(probes.begin(), probes.end());
  std::sort(rep.probes.begin(), rep.probes.end());
  rep.sup_abs_v.assign(static_cast<std::size_t>(n), 0.0);
  const std::size_t total =
      rep.probes.size() * static_cast<std::size_t>(n);
  rep.samples_kept = total <= 4'000'000;
  if (rep.samples_kept) rep.samples.reserve(total);

  const auto& events = traj.events();
  if (traj.fast_path()) {
    std::vector<double> a(static_cast<std::size_t>(n), traj.a_initial());
    std::vector<std::size_t> own_pos(static_cast<std::size_t>(n), 0);
    double s = 0.0;
    std::size_t e = 0;
    for (double p : rep.probes) {
      while (e < events.size() && events[e].time <= p) {
        const std::uint32_t sp = events[e].spiker;
        a[sp] = traj.own_events(sp)[own_pos[sp]++].a_after;
        s = traj.s_after(e);
        ++e;
      }
      const double decay = std::exp(-p);
      const double x_lim = flow.eval(p);
      for (int i = 0; i < n; ++i) {
        const double v =
            sqrt_n * (decay * (a[static_cast<std::size_t>(i)] + s) - x_lim);
        rep.sup_abs_v[static_cast<std::size_t>(i)] =
            std::max(rep.sup_abs_v[static_cast<std::size_t>(i)], std::abs(v));
        if (rep.samples_kept) rep.samples.push_back(v);
      }
    }
  } else {
    const DriftSpec& drift = traj.model().drift;
    const double n_inv = 1.0 / n;
    std::vector<double> x(static_cast<std::size_t>(n), traj.model().x0);
    double t_last = 0.0;
    std::size_t e = 0;
    for (double p : rep.probes) {
      while (e < events.size() && events[e].time <= p) {
        const double dt = events[e].time - t_last;
        for (int i = 0; i < n; ++i) {
          double& xi = x[static_cast<std::size_t>(i)];
          xi = drift_flow_value(drift, xi, dt);
          if (static_cast<std::uint32_t>(i) != events[e].spiker)
            xi += events[e].weight * n_inv;
        }
        t_last = events[e].time;
        ++e;
      }
      const double x_lim = flow.eval(p);
      for (int i = 0; i < n; ++i) {
        const double xi = drift_flow_value(
            drift, x[static_cast<std::size_t>(i)], p - t_last);
        const double v = sqrt_n * (xi - x_lim);
        rep.sup_abs_v[static_cast<std::size_t>(i)] =
            std::max(rep.sup_abs_v[static_cast<std::size_t>(i)], std::abs(v));
        if (rep.samples_kept) rep.samples.push_back(v);
      }
    }
  }
  double m1 = 0.0, m2 = 0.0, m4 = 0.0;
  for (double v : rep.sup_abs_v) {
    m1 += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  const double dn = static_cast<double>(n);
  rep.moment1 = m1 / dn;
  rep.moment2 = m2 / dn;
  rep.moment4 = m4 / dn;
  return rep;
}

double clt_variance(const ModelSpec& model, double x_star,
                    const KernelSpec& kernel) {
  const double big_f = model.big_f(x_star);
  if (std::abs(big_f) < 1e-10)
    throw std::domain_error(
        "clt_variance: F(x*) = 0, the limit is degenerate at equilibria");
  return std::abs(big_f * model.rate.f(x_star)) * kernel_l2_norm(kernel);
}

double martingale_variance(const ModelSpec& model, double x_star,
                           const KernelSpec& kernel) {
  const double big_f = model.big_f(x_star);
  if (std::abs(big_f) < 1e-10)
    throw std::domain_error(
        "martingale_variance: F(x*) = 0, the limit is degenerate");
  return model.rate.f(x_star) / std::abs(big_f) * kernel_l2_norm(kernel);
}

std::vector<BatchRow> estimate_batch(const SystemTrajectory& traj,
                                     EstimatorConfig cfg,
                                     std::span<const double> x_stars,
                                     const FlowSolution* flow,
                                     const RateSpec* true_rate) {
  std::vector<BatchRow> rows;
  rows.reserve(x_stars.size());
  for (double xs : x_stars) {
    cfg.x_star = xs;
    BatchRow row;
    row.x_star = xs;
    if (flow && true_rate) {
      const EstimateReport rep =
          estimate_rate_validated(traj, cfg, *flow, *true_rate);
      row.estimate = rep.estimate;
      row.degenerate = rep.degenerate;
      row.true_value = true_rate->f(xs);
      row.error = rep.estimate - *row.true_value;
      row.omega = rep.omega_flag;
    } else {
      const EstimateReport rep = estimate_rate(traj, cfg);
      row.estimate = rep.estimate;
      row.degenerate = rep.degenerate;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace mfspike
