#pragma once

#include <spawn.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/record.hpp"
#include "prepcast/repo.hpp"

extern char** environ;

namespace prepcast {

namespace detail {

inline std::string read_whole_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Returns the value part of the first "Key: value" line, or empty.
inline std::string find_field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string k = line.substr(0, colon);
    while (!k.empty() && std::isspace(static_cast<unsigned char>(k.back()))) k.pop_back();
    if (k != key) continue;
    std::string v = line.substr(colon + 1);
    std::size_t b = v.find_first_not_of(" \t");
    return b == std::string::npos ? std::string() : v.substr(b);
  }
  return {};
}

// "1024 kB" -> 1024*1024 bytes
inline std::int64_t parse_kb_field(const std::string& value, const std::string& ctx) {
  std::istringstream in(value);
  std::int64_t kb = 0;
  if (!(in >> kb)) throw ParseError(ctx + ": expected a kB value, got '" + value + "'");
  return kb * 1024;
}

}  // namespace detail

// Bandwidth and latency are not derivable from /proc; they come from an
// optional sidecar JSON {"disk_bw_bytes_per_s", "net_bw_bytes_per_s",
// "net_latency_s"} or fall back to conservative defaults.
struct StaticSidecar {
  double disk_bw_bytes_per_s = 500e6;
  double net_bw_bytes_per_s = 1e9;
  double net_latency_s = 1e-4;
};

inline StaticSidecar load_sidecar(const std::string& path) {
  StaticSidecar s;
  json j = load_json_file(path);
  try {
    s.disk_bw_bytes_per_s = j.at("disk_bw_bytes_per_s").get<double>();
    s.net_bw_bytes_per_s = j.at("net_bw_bytes_per_s").get<double>();
    s.net_latency_s = j.at("net_latency_s").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": bad sidecar config (" + e.what() + ")");
  }
  return s;
}

// Parses cpuinfo/meminfo from proc_root (the live /proc or a fixture
// directory). Expected shapes:
//   cpuinfo:  processor : 0        (one stanza per core)
//             cpu MHz   : 2500.000
//             cache size: 8192 KB
//   meminfo:  MemTotal:   4096 kB
inline StaticFeatures read_static(const std::string& proc_root, const StaticSidecar& sidecar = {}) {
  std::string cpuinfo = detail::read_whole_file(proc_root + "/cpuinfo");
  std::string meminfo = detail::read_whole_file(proc_root + "/meminfo");

  StaticFeatures s;
  s.cores = 0;
  std::istringstream in(cpuinfo);
  std::string line;
  while (std::getline(in, line))
    if (line.rfind("processor", 0) == 0) ++s.cores;
  if (s.cores == 0) throw MissingFieldError(proc_root + "/cpuinfo: no processor stanzas");

  std::string mhz = detail::find_field(cpuinfo, "cpu MHz");
  if (mhz.empty()) throw MissingFieldError(proc_root + "/cpuinfo: missing 'cpu MHz'");
  s.cpu_mhz = std::stod(mhz);

  std::string cache = detail::find_field(cpuinfo, "cache size");
  if (cache.empty()) throw MissingFieldError(proc_root + "/cpuinfo: missing 'cache size'");
  s.cache_kb = detail::parse_kb_field(cache, proc_root + "/cpuinfo cache size") / 1024;

  std::string memtotal = detail::find_field(meminfo, "MemTotal");
  if (memtotal.empty()) throw MissingFieldError(proc_root + "/meminfo: missing 'MemTotal'");
  s.mem_total_bytes = detail::parse_kb_field(memtotal, proc_root + "/meminfo MemTotal");

  s.disk_bw_bytes_per_s = sidecar.disk_bw_bytes_per_s;
  s.net_bw_bytes_per_s = sidecar.net_bw_bytes_per_s;
  s.net_latency_s = sidecar.net_latency_s;
  return s;
}

struct ProcessSnapshot {
  std::int64_t vm_size_bytes = 0;
  std::int64_t vm_peak_bytes = 0;
  std::int64_t vm_rss_bytes = 0;
  std::int64_t threads = 0;
};

// Reads proc_root/<pid>/status. kB fields are converted to bytes.
inline ProcessSnapshot sample_process(const std::string& proc_root, int pid) {
  std::string path = proc_root + "/" + std::to_string(pid) + "/status";
  if (!std::filesystem::exists(path))
    throw NoSuchProcessError("no status file for pid " + std::to_string(pid) + " under " + proc_root);
  std::string status = detail::read_whole_file(path);

  ProcessSnapshot snap;
  auto grab_kb = [&](const char* key) -> std::int64_t {
    std::string v = detail::find_field(status, key);
    if (v.empty()) throw ParseError(path + ": missing '" + std::string(key) + "'");
    return detail::parse_kb_field(v, path);
  };
  snap.vm_peak_bytes = grab_kb("VmPeak");
  snap.vm_size_bytes = grab_kb("VmSize");
  snap.vm_rss_bytes = grab_kb("VmRSS");

  std::string threads = detail::find_field(status, "Threads");
  if (threads.empty()) throw ParseError(path + ": missing 'Threads'");
  snap.threads = std::stoll(threads);
  return snap;
}

struct ProfileOptions {
  std::string proc_root = "/proc";
  StaticSidecar sidecar;
  // I/O access and network transfer time cannot be read from
  // /proc/<pid>/status; callers that know them pass them in.
  double io_time_s = 0.0;
  double net_transfer_s = 0.0;
};

// Spawns cmd and samples /proc/<pid>/status every interval_s until it exits.
// mem_peak = max VmPeak seen, mem_avg = mean VmRSS over samples, exec time is
// wall clock. The record is appended to the repository; the exit status lands
// in record metadata rather than failing the profile, so crashing commands
// still leave evidence behind.
inline ProfileRecord profile_command(const std::vector<std::string>& cmd, const AppFeatures& app,
                                     const std::string& resource_class, double interval_s,
                                     TraceRepo& repo, const ProfileOptions& opts = {}) {
  if (cmd.empty()) throw SpawnError("profile: empty command");
  if (interval_s < 0.01) throw ConfigError("profile: interval_s must be >= 0.01");

  StaticFeatures st = read_static(opts.proc_root, opts.sidecar);

  std::vector<char*> argv;
  argv.reserve(cmd.size() + 1);
  for (const std::string& a : cmd) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  auto t0 = std::chrono::steady_clock::now();
  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
  if (rc != 0) throw SpawnError("profile: cannot spawn '" + cmd[0] + "': " + std::strerror(rc));

  std::int64_t peak = 0;
  double rss_sum = 0.0;
  std::size_t samples = 0;
  bool exited = false;
  int status = 0;

  while (!exited) {
    try {
      ProcessSnapshot snap = sample_process(opts.proc_root, pid);
      peak = std::max(peak, snap.vm_peak_bytes);
      rss_sum += double(snap.vm_rss_bytes);
      ++samples;
    } catch (const Error&) {
      // process already gone or mid-teardown; the wait below settles it
    }
    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) {
      exited = true;
    } else {
      std::this_thread::sleep_for(std::chrono::duration<double>(interval_s));
    }
  }
  auto t1 = std::chrono::steady_clock::now();

  ProfileRecord r;
  r.record_id = "prof-" + std::to_string(::getpid()) + "-" + std::to_string(pid) + "-" +
                std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(
                                   t1.time_since_epoch())
                                   .count());
  r.resource_class = resource_class;
  r.app = app;
  r.static_f = st;
  r.observed.exec_time_s = std::chrono::duration<double>(t1 - t0).count();
  r.observed.mem_peak_bytes = double(peak);
  r.observed.mem_avg_bytes = samples > 0 ? rss_sum / double(samples) : 0.0;
  r.observed.mem_avg_bytes = std::min(r.observed.mem_avg_bytes, r.observed.mem_peak_bytes);
  r.observed.io_time_s = opts.io_time_s;
  r.observed.net_transfer_s = opts.net_transfer_s;
  r.timestamp = double(std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count()) /
                1000.0;
  r.meta["cmd"] = cmd[0];
  r.meta["samples"] = std::to_string(samples);
  if (WIFEXITED(status)) r.meta["exit_status"] = std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) r.meta["signal"] = std::to_string(WTERMSIG(status));

  repo.append(r);
  return r;
}

}  // namespace prepcast
