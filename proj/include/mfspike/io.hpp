#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mfspike/simulator.hpp"

namespace mfspike {

// FNV-1a 64-bit digest, hex string. Used for manifest reproducibility checks.
std::string fnv1a64_hex(const std::string& bytes);
std::string file_digest(const std::string& path);

// Write-then-rename so partially written files never appear under the name.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// CSV writers; numbers serialized with %.17g so re-reads are lossless.
std::string csv_join(const std::vector<std::string>& cells);
std::string format_double(double v);

// Event log rows: n, t, spiker (1-based in the file), weight, pre-jump
// potential.
std::string events_to_csv(const SystemTrajectory& traj);

// Resolved-run manifest accompanying every CLI output directory.
struct RunManifest {
  std::string tool = "mfspike";
  std::string version;
  std::string command;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string config_json;  // resolved configuration snapshot
  std::map<std::string, std::string> output_digests;
  std::map<std::string, double> timings_ms;

  std::string to_json() const;
};

void write_manifest(const RunManifest& manifest, const std::string& dir);

}  // namespace mfspike
