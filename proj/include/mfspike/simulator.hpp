#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mfspike/model.hpp"

namespace mfspike {

// One system spike: time, spiking neuron (0-based), synaptic weight drawn
// from nu, and the spiker's potential just before the jump.
struct SpikeEvent {
  double time = 0.0;
  std::uint32_t spiker = 0;
  double weight = 0.0;
  double pre_potential = 0.0;
};

enum class RecordLevel { events_only, snapshots, probed };
enum class SimPath { automatic, fast_linear, general };
enum class BoundStrategy { automatic, global_l, monotone_decay, user };

struct SimOptions {
  RecordLevel record = RecordLevel::events_only;
  SimPath path = SimPath::automatic;
  BoundStrategy bound = BoundStrategy::automatic;
  // Per-neuron dominating rate as a function of the potential (user strategy).
  std::function<double(double)> user_bound;
  // Monotone-decay bounds are re-frozen at every accepted event and at this
  // cadence in between, to keep rejection rates low.
  double checkpoint_dt = 0.1;
  std::uint64_t event_cap = 100'000'000;
  // O(N) check of sum_j f(X_j) <= Lambda at every candidate (slow; tests).
  bool validate_bounds = false;
  // State snapshots at these times when record == probed.
  std::vector<double> probe_times;
};

struct SimulationError : std::runtime_error {
  SimulationError(const std::string& what, double time, std::uint64_t events)
      : std::runtime_error(what), time(time), event_count(events) {}
  double time;
  std::uint64_t event_count;
};

// Immutable record of one event-driven run. On the fast linear-drift path the
// state is reconstructed from the event log alone via the shared-accumulator
// representation X_i(t) = exp(-t) (A_i + S_t); on the general path snapshots
// (or a sequential replay) supply the state.
class SystemTrajectory {
 public:
  const ModelSpec& model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  double terminal_time() const { return terminal_; }
  bool fast_path() const { return fast_; }
  RecordLevel record_level() const { return record_; }
  const std::vector<SpikeEvent>& events() const { return events_; }

  // X_i(t); `left_limit` excludes an event exactly at t.
  double potential(std::uint32_t neuron, double t,
                   bool left_limit = false) const;

  // Fast-path accessors used by the estimator replay.
  struct OwnEvent {
    std::uint32_t event_idx;
    double a_after;  // neuron's shared-accumulator constant after this event
  };
  double s_after(std::size_t event_idx) const;  // S after events [0..idx]
  double a_initial() const { return model_.x0; }
  std::span<const OwnEvent> own_events(std::uint32_t neuron) const {
    return own_[neuron];
  }

  const std::vector<double>& snapshots() const { return snapshots_; }
  const std::vector<double>& probe_times() const { return probe_times_; }
  const std::vector<double>& probe_states() const { return probe_states_; }

  // Assembles a trajectory from a raw event log (testing and file loading).
  static SystemTrajectory from_events(ModelSpec model,
                                      std::vector<SpikeEvent> events,
                                      double terminal_time,
                                      std::uint64_t seed = 0,
                                      RecordLevel record = RecordLevel::events_only,
                                      std::vector<double> snapshots = {},
                                      std::vector<double> probe_times = {},
                                      std::vector<double> probe_states = {});

  void save(const std::string& path) const;
  static SystemTrajectory load(const std::string& path);

 private:
  friend SystemTrajectory simulate(const ModelSpec&, std::uint64_t,
                                   const SimOptions&);
  SystemTrajectory() = default;
  void finalize();
  double potential_fast(std::uint32_t neuron, double t, bool left) const;
  double potential_general(std::uint32_t neuron, double t, bool left) const;

  ModelSpec model_;
  std::uint64_t seed_ = 0;
  RecordLevel record_ = RecordLevel::events_only;
  bool fast_ = true;
  double terminal_ = 0.0;
  std::vector<SpikeEvent> events_;
  std::vector<double> snapshots_;     // [event][neuron], post-jump
  std::vector<double> probe_times_;
  std::vector<double> probe_states_;  // [probe][neuron]

  // Caches built once in finalize().
  std::vector<double> s_prefix_;
  std::vector<std::vector<OwnEvent>> own_;
};

// Statistically exact draw of the finite system on [0, T] by thinning.
SystemTrajectory simulate(const ModelSpec& model, std::uint64_t seed,
                          const SimOptions& opts = {});

// Index of the spiking neuron from the per-neuron jump increments at one
// event: the unique increment of minimal magnitude. Throws when the minimum
// is ambiguous.
std::uint32_t identify_spiker(std::span<const double> increments);

struct ExtinctionReport {
  bool extinct = false;
  std::optional<double> last_spike;
  double terminal_rate = 0.0;
  double quiet_horizon = 0.0;
  double rate_epsilon = 0.0;
};

// Extinct iff no event in the final quiet_horizon and the terminal total rate
// sum_i f(X_i(T)) is below rate_epsilon. Negative arguments select the
// defaults quiet_horizon = 0.2 T and rate_epsilon = 1e-6 N.
ExtinctionReport detect_extinction(const SystemTrajectory& traj,
                                   double quiet_horizon = -1.0,
                                   double rate_epsilon = -1.0);

struct ExtinctionBound {
  double probability = 1.0;
  double log_probability = 0.0;
};

// exp(-N int_0^r log(1+u)/u du): lower bound on the probability that the
// purely excitatory log1p system started below r never spikes.
ExtinctionBound extinction_lower_bound(int n, double r);

struct LyapunovReport {
  // max over states of A^N V(x) - V(x)/2 and the resulting constant C.
  double max_excess = 0.0;
  double constant_c = 0.0;
  std::vector<double> generator_values;
};

// Evaluates the generator applied to V(x) = sum_i |x_i| on the given states
// (quadrature over nu for the jump term) and checks A^N V <= V/2 + C.
LyapunovReport lyapunov_drift_check(
    std::span<const std::vector<double>> states, const ModelSpec& model);

}  // namespace mfspike
