#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "prepcast/record.hpp"
#include "prepcast/workflow.hpp"

namespace prepcast {

// One learning row: application, static and dynamic features side by side.
// Byte-scale counts enter as log1p so that a 1 MB and a 100 GB input differ
// by a handful of split thresholds instead of five orders of magnitude.
inline constexpr std::size_t kFeatureDim = 20;

inline const std::array<std::string, kFeatureDim>& feature_names() {
  static const std::array<std::string, kFeatureDim> names = {
      "log1p_input_bytes", "flop_count",      "branching_factor", "log1p_io_bytes",
      "mix_int",           "mix_float",       "mix_mem",          "mix_branch",
      "mix_io",            "cores",           "cpu_mhz",          "cache_kb",
      "log1p_mem_total",   "log1p_disk_bw",   "log1p_net_bw",     "net_latency_s",
      "jobs_running",      "queue_wait_s",    "load_average",     "log1p_mem_used",
  };
  return names;
}

using FeatureRow = std::array<double, kFeatureDim>;

inline FeatureRow featurize(const AppFeatures& app, const StaticFeatures& st,
                            const DynFeatures& dyn) {
  FeatureRow x;
  x[0] = std::log1p(double(app.input_bytes));
  x[1] = double(app.flop_count);
  x[2] = app.branching_factor;
  x[3] = std::log1p(double(app.io_bytes));
  for (int k = 0; k < 5; ++k) x[4 + std::size_t(k)] = app.instruction_mix[std::size_t(k)];
  x[9] = double(st.cores);
  x[10] = st.cpu_mhz;
  x[11] = double(st.cache_kb);
  x[12] = std::log1p(double(st.mem_total_bytes));
  x[13] = std::log1p(st.disk_bw_bytes_per_s);
  x[14] = std::log1p(st.net_bw_bytes_per_s);
  x[15] = st.net_latency_s;
  x[16] = double(dyn.jobs_running);
  x[17] = dyn.queue_wait_s;
  x[18] = dyn.load_average;
  x[19] = std::log1p(double(dyn.mem_used_bytes));
  return x;
}

inline FeatureRow featurize(const ProfileRecord& r) {
  return featurize(r.app, r.static_f, r.dyn);
}

// Transfer rows carry only what the wire sees: payload plus both endpoints'
// link parameters.
inline constexpr std::size_t kTransferFeatureDim = 5;

using TransferRow = std::array<double, kTransferFeatureDim>;

inline TransferRow transfer_featurize(std::uint64_t payload_bytes, double from_bw, double from_lat,
                                      double to_bw, double to_lat) {
  return TransferRow{std::log1p(double(payload_bytes)), std::log1p(from_bw), from_lat,
                     std::log1p(to_bw), to_lat};
}

inline TransferRow transfer_featurize(const TransferRecord& r) {
  return transfer_featurize(r.payload_bytes, r.from_net_bw_bytes_per_s, r.from_net_latency_s,
                            r.to_net_bw_bytes_per_s, r.to_net_latency_s);
}

}  // namespace prepcast
