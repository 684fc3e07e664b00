#include "mfspike/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "mfspike/config.hpp"

namespace mfspike {

std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016" PRIx64, h);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_digest(const std::string& path) {
  return fnv1a64_hex(read_file(path));
}

void atomic_write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + tmp);
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string csv_join(const std::vector<std::string>& cells) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  line += '\n';
  return line;
}

std::string events_to_csv(const SystemTrajectory& traj) {
  std::string out = "n,t,spiker,weight,pre_potential\n";
  std::size_t k = 1;
  for (const SpikeEvent& e : traj.events()) {
    out += csv_join({std::to_string(k++), format_double(e.time),
                     std::to_string(e.spiker + 1), format_double(e.weight),
                     format_double(e.pre_potential)});
  }
  return out;
}

std::string RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = tool;
  j["version"] = version;
  j["command"] = command;
  j["seed"] = seed;
  j["threads"] = threads;
  j["config"] = nlohmann::json::parse(config_json.empty() ? "{}" : config_json);
  for (const auto& [name, digest] : output_digests)
    j["outputs"][name]["fnv1a64"] = digest;
  for (const auto& [name, ms] : timings_ms) j["timings_ms"][name] = ms;
  return j.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& dir) {
  atomic_write_file((std::filesystem::path(dir) / "manifest.json").string(),
                    manifest.to_json());
}

namespace {

constexpr char kTrajMagic[8] = {'M', 'F', 'S', 'P', 'T', 'R', 'J', '1'};
constexpr std::uint32_t kTrajVersion = 1;

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T take(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size())
    throw std::runtime_error("trajectory file: truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

void put_doubles(std::string& out, const std::vector<double>& v) {
  put<std::uint64_t>(out, v.size());
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
}

std::vector<double> take_doubles(const std::string& in, std::size_t& pos) {
  const auto n = take<std::uint64_t>(in, pos);
  if (pos + n * sizeof(double) > in.size())
    throw std::runtime_error("trajectory file: truncated");
  std::vector<double> v(n);
  std::memcpy(v.data(), in.data() + pos, n * sizeof(double));
  pos += n * sizeof(double);
  return v;
}

}  // namespace

void SystemTrajectory::save(const std::string& path) const {
  std::string out;
  out.append(kTrajMagic, sizeof(kTrajMagic));
  put<std::uint32_t>(out, kTrajVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(record_));
  put<std::uint32_t>(out, fast_ ? 1u : 0u);
  put<std::uint64_t>(out, seed_);
  put<double>(out, terminal_);
  const std::string config = model_config_to_json(model_);
  put<std::uint64_t>(out, config.size());
  out += config;
  put<std::uint64_t>(out, events_.size());
  for (const SpikeEvent& e : events_) {
    put<double>(out, e.time);
    put<std::uint32_t>(out, e.spiker);
    put<double>(out, e.weight);
    put<double>(out, e.pre_potential);
  }
  put_doubles(out, snapshots_);
  put_doubles(out, probe_times_);
  put_doubles(out, probe_states_);
  atomic_write_file(path, out);
}

SystemTrajectory SystemTrajectory::load(const std::string& path) {
  const std::string in = read_file(path);
  std::size_t pos = 0;
  if (in.size() < sizeof(kTrajMagic) ||
      std::memcmp(in.data(), kTrajMagic, sizeof(kTrajMagic)) != 0)
    throw std::runtime_error("trajectory file: bad magic header");
  pos = sizeof(kTrajMagic);
  const auto version = take<std::uint32_t>(in, pos);
  if (version != kTrajVersion)
    throw std::runtime_error("trajectory file: version mismatch (have " +
                             std::to_string(version) + ", expected " +
                             std::to_string(kTrajVersion) + ")");
  const auto record = static_cast<RecordLevel>(take<std::uint32_t>(in, pos));
  take<std::uint32_t>(in, pos);  // fast flag re-derived from the drift
  const auto seed = take<std::uint64_t>(in, pos);
  const auto terminal = take<double>(in, pos);
  const auto config_len = take<std::uint64_t>(in, pos);
  if (pos + config_len > in.size())
    throw std::runtime_error("trajectory file: truncated");
  const std::string config = in.substr(pos, config_len);
  pos += config_len;
  const ModelConfig mc = parse_model_config(config);
  const auto n_events = take<std::uint64_t>(in, pos);
  std::vector<SpikeEvent> events;
  events.reserve(n_events);
  for (std::uint64_t e = 0; e < n_events; ++e) {
    SpikeEvent ev;
    ev.time = take<double>(in, pos);
    ev.spiker = take<std::uint32_t>(in, pos);
    ev.weight = take<double>(in, pos);
    ev.pre_potential = take<double>(in, pos);
    events.push_back(ev);
  }
  std::vector<double> snapshots = take_doubles(in, pos);
  std::vector<double> probe_times = take_doubles(in, pos);
  std::vector<double> probe_states = take_doubles(in, pos);
  return from_events(mc.model, std::move(events), terminal, seed, record,
                     std::move(snapshots), std::move(probe_times),
                     std::move(probe_states));
}

}  // namespace mfspike
