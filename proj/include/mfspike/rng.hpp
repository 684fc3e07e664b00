#pragma once

#include <cstdint>
#include <random>

namespace mfspike {

// splitmix64 step; `state` advances, the return value is the hash output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based stream derivation: one master seed fans out into independent
// engine seeds keyed by (purpose, index). Stable across platforms and thread
// schedules, so replicate r always sees the same randomness no matter how the
// work is partitioned.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose,
                                 std::uint64_t index = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s = h ^ purpose;
  h = splitmix64(s);
  s = h ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t master, std::uint64_t purpose,
                                   std::uint64_t index = 0) {
  return std::mt19937_64(derive_seed(master, purpose, index));
}

// Purpose tags used by the simulator and the experiment harness.
namespace rng_purpose {
inline constexpr std::uint64_t event_loop = 0x01;
inline constexpr std::uint64_t weights = 0x02;
inline constexpr std::uint64_t replicate = 0x10;
}  // namespace rng_purpose

}  // namespace mfspike
