#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/prng.hpp"
#include "prepcast/record.hpp"

namespace prepcast {

// Closed-form resource laws for one resource class. The synthetic oracle is
// the desk-scale stand-in for real cluster runs: agents are validated by
// checking that they recover these laws from sampled records.
struct LawCoefficients {
  double t_flop_s_per_gop = 1.0;   // seconds per 10^9 operations at 2500 MHz
  double t_io_s_per_gb = 1.0;      // disk efficiency factor, 1.0 = nominal bandwidth
  double t_mem_factor = 0.7;       // mem_avg = factor * mem_peak
  double contention_slope = 0.1;   // relative slowdown per concurrent job
  double mem_overhead_bytes = 64e6;
  double mem_slope = 1.0;          // bytes of peak memory per input byte

  bool operator==(const LawCoefficients&) const = default;
};

struct OracleLaw {
  std::string name = "law";
  std::map<std::string, LawCoefficients> classes;
  double noise_rel_sigma = 0.0;  // in [0, 0.5]
  std::uint64_t seed = 0;

  const LawCoefficients& for_class(const std::string& klass) const {
    auto it = classes.find(klass);
    if (it == classes.end()) throw ConfigError("oracle law has no class '" + klass + "'");
    return it->second;
  }
};

inline void validate_law(const OracleLaw& law) {
  if (law.classes.empty()) throw ConfigError("oracle law: no resource classes");
  if (!(law.noise_rel_sigma >= 0.0 && law.noise_rel_sigma <= 0.5))
    throw ConfigError("oracle law: noise_rel_sigma must be in [0, 0.5]");
  for (const auto& [name, c] : law.classes) {
    const double vals[] = {c.t_flop_s_per_gop, c.t_io_s_per_gb,   c.t_mem_factor,
                           c.contention_slope, c.mem_overhead_bytes, c.mem_slope};
    for (double v : vals)
      if (!(v >= 0.0)) throw ConfigError("oracle law class '" + name + "': negative coefficient");
  }
}

// Noiseless ground-truth metrics. Compute time scales with FLOPs, inversely
// with clock (2500 MHz reference) and linearly with contention; I/O time is
// bytes over disk bandwidth scaled by the class's disk factor.
inline MetricVector ground_truth(const LawCoefficients& c, const AppFeatures& app,
                                 const StaticFeatures& st, const DynFeatures& dyn) {
  MetricVector m;
  double gops = double(app.flop_count) / 1e9;
  double compute_s = gops * c.t_flop_s_per_gop * (2500.0 / st.cpu_mhz) *
                     (1.0 + c.contention_slope * double(dyn.jobs_running));
  m.io_time_s = double(app.io_bytes) * c.t_io_s_per_gb / st.disk_bw_bytes_per_s;
  m.exec_time_s = compute_s + m.io_time_s;
  m.mem_peak_bytes = c.mem_overhead_bytes + c.mem_slope * double(app.input_bytes);
  m.mem_avg_bytes = c.t_mem_factor * m.mem_peak_bytes;
  m.net_transfer_s = 0.0;  // per-edge quantity, see transfer_truth
  return m;
}

// Transfer time over an edge: zero when co-located, otherwise the larger
// endpoint latency plus payload over the bottleneck bandwidth.
inline double transfer_truth(std::uint64_t payload_bytes, const StaticFeatures& st_from,
                             const StaticFeatures& st_to, bool same_node) {
  if (same_node) return 0.0;
  double bw = std::min(st_from.net_bw_bytes_per_s, st_to.net_bw_bytes_per_s);
  double lat = std::max(st_from.net_latency_s, st_to.net_latency_s);
  return lat + double(payload_bytes) / bw;
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Uniform sampling ranges for every feature the oracle varies.
struct FeatureRanges {
  Range input_bytes{1e6, 1e9};
  Range flop_count{1e9, 1e11};
  Range branching_factor{0.0, 50.0};
  Range io_bytes{1e6, 1e9};
  Range cores{1, 64};
  Range cpu_mhz{2000.0, 3000.0};
  Range cache_kb{1024, 32768};
  Range mem_total_bytes{8e9, 256e9};
  Range disk_bw_bytes_per_s{2e8, 4e8};
  Range net_bw_bytes_per_s{1e8, 1e10};
  Range net_latency_s{1e-5, 1e-3};
  Range jobs_running{0, 6};
  Range queue_wait_s{0.0, 600.0};
  Range load_average{0.0, 16.0};
  Range mem_used_bytes{0, 8e9};
  Range payload_bytes{1e6, 1e10};
};

namespace detail {

inline void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string("sampler range '") + name + "' is empty");
}

inline void check_ranges(const FeatureRanges& fr) {
  check_range(fr.input_bytes, "input_bytes");
  check_range(fr.flop_count, "flop_count");
  check_range(fr.branching_factor, "branching_factor");
  check_range(fr.io_bytes, "io_bytes");
  check_range(fr.cores, "cores");
  check_range(fr.cpu_mhz, "cpu_mhz");
  check_range(fr.cache_kb, "cache_kb");
  check_range(fr.mem_total_bytes, "mem_total_bytes");
  check_range(fr.disk_bw_bytes_per_s, "disk_bw_bytes_per_s");
  check_range(fr.net_bw_bytes_per_s, "net_bw_bytes_per_s");
  check_range(fr.net_latency_s, "net_latency_s");
  check_range(fr.jobs_running, "jobs_running");
  check_range(fr.queue_wait_s, "queue_wait_s");
  check_range(fr.load_average, "load_average");
  check_range(fr.mem_used_bytes, "mem_used_bytes");
  check_range(fr.payload_bytes, "payload_bytes");
}

inline std::uint64_t sample_count(SplitMix64& g, const Range& r) {
  auto lo = std::uint64_t(r.lo), hi = std::uint64_t(r.hi);
  return lo + g.next_below(hi - lo + 1);
}

inline double noisy(double truth, double sigma, SplitMix64& g) {
  if (sigma == 0.0) return truth;
  return std::max(0.0, truth * (1.0 + sigma * g.gaussian()));
}

}  // namespace detail

// n reproducible records for one resource class. Record i draws from an
// independent substream of (seed, class, i), so generation order (or
// parallel generation) cannot change the dataset.
inline std::vector<ProfileRecord> generate_dataset(const OracleLaw& law, const std::string& klass,
                                                   int n, const FeatureRanges& ranges) {
  if (n < 1) throw ConfigError("generate_dataset: n must be >= 1");
  validate_law(law);
  detail::check_ranges(ranges);
  const LawCoefficients& c = law.for_class(klass);

  std::vector<ProfileRecord> out;
  out.reserve(std::size_t(n));
  std::uint64_t class_seed = law.seed ^ fnv1a(klass);
  for (int i = 0; i < n; ++i) {
    SplitMix64 g(substream_seed(class_seed, std::uint64_t(i)));

    ProfileRecord r;
    r.record_id = "sim-" + klass + "-" + std::to_string(law.seed) + "-" + std::to_string(i);
    r.resource_class = klass;
    r.timestamp = 0.0;
    r.meta["law"] = law.name;

    r.app.input_bytes = detail::sample_count(g, ranges.input_bytes);
    r.app.flop_count = detail::sample_count(g, ranges.flop_count);
    r.app.branching_factor = g.uniform(ranges.branching_factor.lo, ranges.branching_factor.hi);
    r.app.io_bytes = detail::sample_count(g, ranges.io_bytes);
    double mix_sum = 0.0;
    for (double& f : r.app.instruction_mix) {
      f = g.next_double() + 1e-9;
      mix_sum += f;
    }
    for (double& f : r.app.instruction_mix) f /= mix_sum;
    // renormalization leaves a <=1e-12 residue; fold it into the first slot
    double resid = 1.0;
    for (int k = 1; k < 5; ++k) resid -= r.app.instruction_mix[k];
    r.app.instruction_mix[0] = resid;

    r.static_f.cores = std::int64_t(detail::sample_count(g, ranges.cores));
    r.static_f.cpu_mhz = g.uniform(ranges.cpu_mhz.lo, ranges.cpu_mhz.hi);
    r.static_f.cache_kb = std::int64_t(detail::sample_count(g, ranges.cache_kb));
    r.static_f.mem_total_bytes = std::int64_t(detail::sample_count(g, ranges.mem_total_bytes));
    r.static_f.disk_bw_bytes_per_s = g.uniform(ranges.disk_bw_bytes_per_s.lo, ranges.disk_bw_bytes_per_s.hi);
    r.static_f.net_bw_bytes_per_s = g.uniform(ranges.net_bw_bytes_per_s.lo, ranges.net_bw_bytes_per_s.hi);
    r.static_f.net_latency_s = g.uniform(ranges.net_latency_s.lo, ranges.net_latency_s.hi);

    r.dyn.jobs_running = std::int64_t(detail::sample_count(g, ranges.jobs_running));
    r.dyn.queue_wait_s = g.uniform(ranges.queue_wait_s.lo, ranges.queue_wait_s.hi);
    r.dyn.load_average = g.uniform(ranges.load_average.lo, ranges.load_average.hi);
    r.dyn.mem_used_bytes = std::int64_t(detail::sample_count(g, ranges.mem_used_bytes));

    MetricVector truth = ground_truth(c, r.app, r.static_f, r.dyn);
    double sigma = law.noise_rel_sigma;
    r.observed.exec_time_s = detail::noisy(truth.exec_time_s, sigma, g);
    r.observed.mem_peak_bytes = detail::noisy(truth.mem_peak_bytes, sigma, g);
    r.observed.mem_avg_bytes =
        std::min(detail::noisy(truth.mem_avg_bytes, sigma, g), r.observed.mem_peak_bytes);
    r.observed.io_time_s = detail::noisy(truth.io_time_s, sigma, g);
    r.observed.net_transfer_s = 0.0;

    out.push_back(std::move(r));
  }
  return out;
}

// Cross-node transfer observations for the receiving class (same-node
// transfers are structurally zero and not worth learning).
inline std::vector<TransferRecord> generate_transfer_dataset(const OracleLaw& law,
                                                             const std::string& to_class, int n,
                                                             const FeatureRanges& ranges) {
  if (n < 1) throw ConfigError("generate_transfer_dataset: n must be >= 1");
  validate_law(law);
  detail::check_ranges(ranges);
  law.for_class(to_class);  // classes must exist even though the law is class-free here

  std::vector<TransferRecord> out;
  out.reserve(std::size_t(n));
  std::uint64_t class_seed = law.seed ^ fnv1a("transfer/" + to_class);
  for (int i = 0; i < n; ++i) {
    SplitMix64 g(substream_seed(class_seed, std::uint64_t(i)));

    TransferRecord r;
    r.record_id = "simx-" + to_class + "-" + std::to_string(law.seed) + "-" + std::to_string(i);
    r.to_resource_class = to_class;
    r.timestamp = 0.0;
    r.meta["law"] = law.name;
    r.payload_bytes = detail::sample_count(g, ranges.payload_bytes);
    r.from_net_bw_bytes_per_s = g.uniform(ranges.net_bw_bytes_per_s.lo, ranges.net_bw_bytes_per_s.hi);
    r.from_net_latency_s = g.uniform(ranges.net_latency_s.lo, ranges.net_latency_s.hi);
    r.to_net_bw_bytes_per_s = g.uniform(ranges.net_bw_bytes_per_s.lo, ranges.net_bw_bytes_per_s.hi);
    r.to_net_latency_s = g.uniform(ranges.net_latency_s.lo, ranges.net_latency_s.hi);

    StaticFeatures from, to;
    from.net_bw_bytes_per_s = r.from_net_bw_bytes_per_s;
    from.net_latency_s = r.from_net_latency_s;
    to.net_bw_bytes_per_s = r.to_net_bw_bytes_per_s;
    to.net_latency_s = r.to_net_latency_s;
    r.observed_s = detail::noisy(transfer_truth(r.payload_bytes, from, to, false),
                                 law.noise_rel_sigma, g);
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// law config JSON:
//   {"v":1, "name":..., "seed":..., "noise_rel_sigma":...,
//    "classes": {"gordon": {"t_flop_s_per_gop":..., ...}},
//    "ranges": {"flop_count":[lo,hi], ...}}   (ranges optional)

inline json law_to_json(const OracleLaw& law) {
  json classes = json::object();
  for (const auto& [name, c] : law.classes)
    classes[name] = json{{"t_flop_s_per_gop", c.t_flop_s_per_gop},
                         {"t_io_s_per_gb", c.t_io_s_per_gb},
                         {"t_mem_factor", c.t_mem_factor},
                         {"contention_slope", c.contention_slope},
                         {"mem_overhead_bytes", c.mem_overhead_bytes},
                         {"mem_slope", c.mem_slope}};
  return json{{"v", 1},
              {"name", law.name},
              {"seed", law.seed},
              {"noise_rel_sigma", law.noise_rel_sigma},
              {"classes", std::move(classes)}};
}

inline OracleLaw law_from_json(const json& j) {
  require_v1(j, "law config");
  OracleLaw law;
  try {
    law.name = j.value("name", "law");
    law.seed = j.value("seed", std::uint64_t(0));
    law.noise_rel_sigma = j.value("noise_rel_sigma", 0.0);
    for (const auto& [name, jc] : j.at("classes").items()) {
      LawCoefficients c;
      c.t_flop_s_per_gop = jc.at("t_flop_s_per_gop").get<double>();
      c.t_io_s_per_gb = jc.at("t_io_s_per_gb").get<double>();
      c.t_mem_factor = jc.at("t_mem_factor").get<double>();
      c.contention_slope = jc.at("contention_slope").get<double>();
      c.mem_overhead_bytes = jc.at("mem_overhead_bytes").get<double>();
      c.mem_slope = jc.at("mem_slope").get<double>();
      law.classes[name] = c;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("law config: malformed (") + e.what() + ")");
  }
  validate_law(law);
  return law;
}

inline Range range_from_json(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError(std::string("ranges.") + name + " must be [lo, hi]");
  return Range{j[0].get<double>(), j[1].get<double>()};
}

inline FeatureRanges ranges_from_json(const json& j) {
  FeatureRanges fr;
  auto grab = [&](const char* name, Range& r) {
    if (j.contains(name)) r = range_from_json(j.at(name), name);
  };
  grab("input_bytes", fr.input_bytes);
  grab("flop_count", fr.flop_count);
  grab("branching_factor", fr.branching_factor);
  grab("io_bytes", fr.io_bytes);
  grab("cores", fr.cores);
  grab("cpu_mhz", fr.cpu_mhz);
  grab("cache_kb", fr.cache_kb);
  grab("mem_total_bytes", fr.mem_total_bytes);
  grab("disk_bw_bytes_per_s", fr.disk_bw_bytes_per_s);
  grab("net_bw_bytes_per_s", fr.net_bw_bytes_per_s);
  grab("net_latency_s", fr.net_latency_s);
  grab("jobs_running", fr.jobs_running);
  grab("queue_wait_s", fr.queue_wait_s);
  grab("load_average", fr.load_average);
  grab("mem_used_bytes", fr.mem_used_bytes);
  grab("payload_bytes", fr.payload_bytes);
  detail::check_ranges(fr);
  return fr;
}

}  // namespace prepcast
