#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "mfspike/parallel.hpp"
#include "mfspike/rng.hpp"
#include "mfspike/simulator.hpp"
#include "mfspike/stats.hpp"
#include "support/oracles.hpp"

using namespace mfspike;

namespace {

DriftSpec zero_drift() {
  DriftSpec d = DriftSpec::custom([](double) { return 0.0; }, 0.0, true);
  d.flow = [](double x, double) { return x; };
  return d;
}

ModelSpec bounded_system(int n, double horizon) {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::two_minus_gauss();
  m.weights = WeightLaw::uniform(-2.0, 3.0);
  m.n = n;
  m.x0 = -1.0;
  m.horizon = horizon;
  return m;
}

ModelSpec excitatory_system(double b, double x0, int n, double horizon) {
  ModelSpec m;
  m.drift = DriftSpec::linear_decay();
  m.rate = RateSpec::log1p_rate();
  m.weights = WeightLaw::uniform(0.0, b);
  m.n = n;
  m.x0 = x0;
  m.horizon = horizon;
  return m;
}

}  // namespace

TEST_CASE("zero rate produces no events and pure drift") {
  ModelSpec m = bounded_system(10, 3.0);
  m.rate = RateSpec::zero();
  const SystemTrajectory traj = simulate(m, 42);
  CHECK(traj.events().empty());
  for (double t : {0.0, 0.7, 1.9, 3.0})
    CHECK(traj.potential(3, t) ==
          doctest::Approx(-std::exp(-t)).epsilon(1e-12));
}

TEST_CASE("single neuron with constant rate is Poisson") {
  ModelSpec m;
  m.drift = zero_drift();
  m.rate = RateSpec::constant(1.3);
  m.weights = WeightLaw::point(1.0);
  m.n = 1;
  m.x0 = 0.4;
  m.horizon = 2.0;

  SUBCASE("its own spikes never move its potential") {
    const SystemTrajectory traj = simulate(m, 5);
    CHECK(traj.events().size() > 0);
    for (double t : {0.0, 0.5, 1.0, 1.7, 2.0})
      CHECK(traj.potential(0, t) == 0.4);
  }

  SUBCASE("event counts match Poisson(lambda T) over 2000 replicas") {
    const int reps = 2000;
    std::vector<double> counts(reps);
    parallel_for_index(reps, 0, [&](std::size_t r) {
      counts[r] = static_cast<double>(
          simulate(m, derive_seed(404, rng_purpose::replicate, r))
              .events()
              .size());
    });
    const double expected = 1.3 * 2.0;
    const double se = std::sqrt(expected / reps);
    CHECK(std::abs(stats::mean(counts) - expected) < 3.0 * se);
  }
}

TEST_CASE("mean spike count matches a fine-step discretized reference") {
  const ModelSpec m = bounded_system(100, 2.0);
  const int reps = 500;
  std::vector<double> exact(reps), discrete(reps);
  parallel_for_index(reps, 0, [&](std::size_t r) {
    exact[r] = static_cast<double>(
        simulate(m, derive_seed(2024, rng_purpose::replicate, r))
            .events()
            .size());
    std::mt19937_64 rng(derive_seed(4048, rng_purpose::replicate, r));
    discrete[r] =
        static_cast<double>(oracle::discretized_system(m, 1e-4, rng).event_count);
  });
  const double gap = stats::mean(exact) - stats::mean(discrete);
  const double se = std::sqrt(stats::variance(exact) / reps +
                              stats::variance(discrete) / reps);
  CHECK(std::abs(gap) < 3.0 * se);
}

TEST_CASE("potential reconstruction") {
  const ModelSpec m = bounded_system(40, 2.0);
  SimOptions opts;
  opts.record = RecordLevel::snapshots;
  opts.path = SimPath::general;
  const SystemTrajectory traj = simulate(m, 11, opts);
  REQUIRE(traj.events().size() > 10);

  SUBCASE("initial condition") {
    for (int i = 0; i < m.n; ++i)
      CHECK(traj.potential(static_cast<std::uint32_t>(i), 0.0) == m.x0);
  }

  SUBCASE("left and right limits at an event") {
    const SpikeEvent& ev = traj.events()[5];
    const double u_over_n = ev.weight / m.n;
    for (int i = 0; i < m.n; ++i) {
      const auto ni = static_cast<std::uint32_t>(i);
      const double left = traj.potential(ni, ev.time, true);
      const double right = traj.potential(ni, ev.time, false);
      if (ni == ev.spiker) {
        CHECK(right == left);  // self-exclusion is exact on this path
      } else {
        CHECK(right - left == doctest::Approx(u_over_n).epsilon(1e-12));
      }
    }
  }

  SUBCASE("pre-jump potential is the recorded left limit") {
    for (const SpikeEvent& ev : traj.events()) {
      CHECK(traj.potential(ev.spiker, ev.time, true) ==
            doctest::Approx(ev.pre_potential).epsilon(1e-12));
    }
  }

  SUBCASE("conservation across an event") {
    for (std::size_t k = 0; k < traj.events().size(); k += 7) {
      const SpikeEvent& ev = traj.events()[k];
      double total = 0.0;
      for (int i = 0; i < m.n; ++i) {
        const auto ni = static_cast<std::uint32_t>(i);
        total += traj.potential(ni, ev.time) - traj.potential(ni, ev.time, true);
      }
      CHECK(total == doctest::Approx((m.n - 1) * ev.weight / m.n)
                         .epsilon(1e-11));
    }
  }

  SUBCASE("index out of range") {
    CHECK_THROWS_AS(traj.potential(40, 1.0), std::out_of_range);
  }
}

TEST_CASE("fast path agrees with the general path on identical randomness") {
  const ModelSpec m = bounded_system(50, 2.0);
  SimOptions fast_opts;
  fast_opts.path = SimPath::fast_linear;
  SimOptions gen_opts;
  gen_opts.path = SimPath::general;
  const SystemTrajectory fast = simulate(m, 31, fast_opts);
  const SystemTrajectory gen = simulate(m, 31, gen_opts);
  REQUIRE(fast.events().size() == gen.events().size());
  REQUIRE(fast.events().size() > 50);
  for (std::size_t e = 0; e < fast.events().size(); ++e) {
    CHECK(fast.events()[e].time == gen.events()[e].time);
    CHECK(fast.events()[e].spiker == gen.events()[e].spiker);
    CHECK(fast.events()[e].weight == gen.events()[e].weight);
  }
  for (int k = 0; k <= 40; ++k) {
    const double t = 2.0 * k / 40.0;
    for (std::uint32_t i = 0; i < 50; i += 7)
      CHECK(std::abs(fast.potential(i, t) - gen.potential(i, t)) < 1e-9);
  }
  // Self-exclusion on the fast path holds to the representation tolerance.
  for (const SpikeEvent& ev : fast.events()) {
    CHECK(std::abs(fast.potential(ev.spiker, ev.time) -
                   fast.potential(ev.spiker, ev.time, true)) < 1e-10);
  }
}

TEST_CASE("determinism and exchangeability") {
  const ModelSpec m = bounded_system(30, 2.0);
  const SystemTrajectory a = simulate(m, 77);
  const SystemTrajectory b = simulate(m, 77);
  REQUIRE(a.events().size() == b.events().size());
  for (std::size_t e = 0; e < a.events().size(); ++e) {
    CHECK(a.events()[e].time == b.events()[e].time);
    CHECK(a.events()[e].spiker == b.events()[e].spiker);
    CHECK(a.events()[e].weight == b.events()[e].weight);
    CHECK(a.events()[e].pre_potential == b.events()[e].pre_potential);
  }

  // Relabeling neurons permutes trajectories exactly.
  std::vector<std::uint32_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 rng(9);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<SpikeEvent> relabeled = a.events();
  for (SpikeEvent& ev : relabeled) ev.spiker = perm[ev.spiker];
  const SystemTrajectory c =
      SystemTrajectory::from_events(m, relabeled, a.terminal_time());
  for (double t : {0.3, 1.1, 1.9}) {
    for (std::uint32_t i = 0; i < 30; ++i)
      CHECK(c.potential(perm[i], t) == a.potential(i, t));
  }
}

TEST_CASE("thinning bound machinery") {
  SUBCASE("valid bounds pass the per-candidate audit") {
    ModelSpec m = bounded_system(20, 1.0);
    SimOptions opts;
    opts.validate_bounds = true;
    CHECK_NOTHROW(simulate(m, 3, opts));

    ModelSpec e = excitatory_system(4.0, 0.1, 20, 2.0);
    CHECK_NOTHROW(simulate(e, 3, opts));
  }

  SUBCASE("a broken user bound aborts") {
    ModelSpec m = bounded_system(20, 2.0);
    SimOptions opts;
    opts.bound = BoundStrategy::user;
    opts.user_bound = [&m](double x) { return 0.4 * m.rate.f(x); };
    CHECK_THROWS_AS(simulate(m, 3, opts), SimulationError);
  }

  SUBCASE("unbounded rate without monotone structure is rejected") {
    ModelSpec m = bounded_system(5, 1.0);
    m.rate = RateSpec::custom([](double x) { return x * x; }, std::nullopt,
                              10.0, false);
    CHECK_THROWS_AS(simulate(m, 1), std::invalid_argument);
  }

  SUBCASE("event cap guards runaway regimes") {
    ModelSpec m = bounded_system(50, 5.0);
    SimOptions opts;
    opts.event_cap = 5;
    CHECK_THROWS_AS(simulate(m, 1, opts), SimulationError);
  }
}

TEST_CASE("identify the spiker from jump increments") {
  SUBCASE("zero increment wins") {
    const double inc[] = {0.002, 0.0, 0.002};
    CHECK(identify_spiker(inc) == 1);
  }
  SUBCASE("no spiker pattern") {
    const double inc[] = {0.01, 0.01, 0.01};
    CHECK_THROWS_AS(identify_spiker(inc), std::runtime_error);
  }
  SUBCASE("self-consistency over a full run") {
    const ModelSpec m = bounded_system(100, 1.0);
    SimOptions opts;
    opts.path = SimPath::general;
    opts.record = RecordLevel::snapshots;
    const SystemTrajectory traj = simulate(m, 21, opts);
    REQUIRE(traj.events().size() > 50);
    std::vector<double> inc(100);
    for (const SpikeEvent& ev : traj.events()) {
      for (std::uint32_t i = 0; i < 100; ++i)
        inc[i] = traj.potential(i, ev.time) - traj.potential(i, ev.time, true);
      CHECK(identify_spiker(inc) == ev.spiker);
    }
  }
}

TEST_CASE("probed recording") {
  ModelSpec m = bounded_system(25, 2.0);
  SimOptions opts;
  opts.record = RecordLevel::probed;
  opts.probe_times = {0.5, 1.0, 1.5};
  const SystemTrajectory traj = simulate(m, 8, opts);
  REQUIRE(traj.probe_times().size() == 3);
  REQUIRE(traj.probe_states().size() == 3 * 25);
  for (std::size_t p = 0; p < 3; ++p) {
    for (std::uint32_t i = 0; i < 25; ++i) {
      CHECK(traj.probe_states()[p * 25 + i] ==
            doctest::Approx(traj.potential(i, traj.probe_times()[p]))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("extinction detection") {
  SUBCASE("silent system") {
    ModelSpec m = bounded_system(10, 5.0);
    m.rate = RateSpec::zero();
    const ExtinctionReport rep = detect_extinction(simulate(m, 1));
    CHECK(rep.extinct);
    CHECK_FALSE(rep.last_spike.has_value());
  }

  SUBCASE("subcritical excitatory system dies, supercritical persists") {
    const int seeds = 10;
    int extinct_small = 0, extinct_large = 0;
    for (int s = 0; s < seeds; ++s) {
      const ModelSpec dying = excitatory_system(1.0, 1.0, 200, 30.0);
      if (detect_extinction(
              simulate(dying, derive_seed(50, rng_purpose::replicate,
                                          static_cast<std::uint64_t>(s))))
              .extinct)
        ++extinct_small;
      const ModelSpec meta = excitatory_system(4.0, 0.1, 200, 30.0);
      if (detect_extinction(
              simulate(meta, derive_seed(60, rng_purpose::replicate,
                                         static_cast<std::uint64_t>(s))))
              .extinct)
        ++extinct_large;
    }
    CHECK(extinct_small > seeds / 2);
    CHECK(extinct_large < seeds / 2);
  }
}

TEST_CASE("extinction lower bound") {
  CHECK(extinction_lower_bound(1000, 0.0).probability == 1.0);
  // int_0^1 log(1+u)/u du = pi^2/12
  const double pi_sq_12 = 0.8224670334241132;
  const ExtinctionBound b = extinction_lower_bound(2, 1.0);
  CHECK(b.probability ==
        doctest::Approx(std::exp(-2.0 * pi_sq_12)).epsilon(1e-8));
  const ExtinctionBound big = extinction_lower_bound(1000, 1.0);
  CHECK(big.log_probability ==
        doctest::Approx(-1000.0 * pi_sq_12).epsilon(1e-8));
  CHECK(big.probability == 0.0);  // underflows; report in log scale
  CHECK_THROWS_AS(extinction_lower_bound(2, -0.5), std::invalid_argument);
}

TEST_CASE("Lyapunov generator check") {
  ModelSpec m = excitatory_system(1.0, 1.0, 4, 1.0);

  SUBCASE("origin") {
    std::vector<std::vector<double>> states = {{0.0, 0.0, 0.0, 0.0}};
    const LyapunovReport rep = lyapunov_drift_check(states, m);
    CHECK(rep.generator_values[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.max_excess <= 0.0 + 1e-12);
  }

  SUBCASE("quadrature matches a Monte Carlo average of V-increments") {
    std::vector<std::vector<double>> states = {{1.0, 1.0, 1.0, 1.0}};
    const LyapunovReport rep = lyapunov_drift_check(states, m);
    // MC oracle for the jump term of the generator.
    std::mt19937_64 rng(7);
    const int draws = 100000;
    std::vector<double> samples(draws);
    for (int d = 0; d < draws; ++d) {
      const double u = m.weights.sample(rng);
      double jump = 0.0;
      for (int i = 0; i < 4; ++i)
        jump += m.rate.f(1.0) * 3.0 * u / 4.0;  // V-increment is (N-1)u/N
      samples[static_cast<std::size_t>(d)] = jump;
    }
    const double v = 4.0;
    const double mc = -v + stats::mean(samples);
    const double se = std::sqrt(stats::variance(samples) / draws);
    CHECK(std::abs(rep.generator_values[0] - mc) < 3.0 * se);
  }

  SUBCASE("doubling large states keeps the excess below the reported C") {
    // States sampled from a run, shifted upward so the decay term dominates.
    const SystemTrajectory traj =
        simulate(excitatory_system(4.0, 0.1, 20, 5.0), 44);
    ModelSpec m20 = excitatory_system(4.0, 0.1, 20, 5.0);
    std::vector<std::vector<double>> base;
    for (double t : {1.0, 2.5, 4.0}) {
      std::vector<double> state(20);
      for (std::uint32_t i = 0; i < 20; ++i)
        state[i] = traj.potential(i, t) + 2.0;
      base.push_back(std::move(state));
    }
    const LyapunovReport rep = lyapunov_drift_check(base, m20);
    std::vector<std::vector<double>> doubled = base;
    for (auto& st : doubled)
      for (double& v : st) v *= 2.0;
    const LyapunovReport rep2 = lyapunov_drift_check(doubled, m20);
    CHECK(rep2.max_excess <= std::max(rep.constant_c, 0.0) + 1e-9);
  }

  SUBCASE("negative entries rejected") {
    std::vector<std::vector<double>> states = {{-0.1, 0.0, 0.0, 0.0}};
    CHECK_THROWS_AS(lyapunov_drift_check(states, m), std::invalid_argument);
  }
}

TEST_CASE("event log persistence") {
  const ModelSpec m = bounded_system(30, 1.5);
  const SystemTrajectory traj = simulate(m, 19);
  const std::string path = "traj_roundtrip.bin";
  traj.save(path);
  const SystemTrajectory loaded = SystemTrajectory::load(path);
  REQUIRE(loaded.events().size() == traj.events().size());
  for (std::size_t e = 0; e < traj.events().size(); ++e) {
    CHECK(loaded.events()[e].time == traj.events()[e].time);
    CHECK(loaded.events()[e].spiker == traj.events()[e].spiker);
    CHECK(loaded.events()[e].weight == traj.events()[e].weight);
    CHECK(loaded.events()[e].pre_potential == traj.events()[e].pre_potential);
  }
  CHECK(loaded.potential(3, 1.2) == traj.potential(3, 1.2));

  SUBCASE("corrupted header is rejected") {
    std::string bytes;
    {
      std::ifstream in(path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      bytes = ss.str();
    }
    bytes[0] = 'X';
    const std::string bad = "traj_bad_magic.bin";
    std::ofstream(bad, std::ios::binary) << bytes;
    CHECK_THROWS_AS(SystemTrajectory::load(bad), std::runtime_error);
  }

  SUBCASE("from_events validates its input") {
    std::vector<SpikeEvent> events = traj.events();
    std::swap(events[0], events[1]);
    CHECK_THROWS_AS(
        SystemTrajectory::from_events(m, events, traj.terminal_time()),
        std::invalid_argument);
  }
}
