#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/workflow.hpp"

namespace prepcast {

enum class MetricKind { ExecTime, MemPeak, MemAvg, IoTime, NetTransfer };

inline constexpr std::array<MetricKind, 5> kAllMetrics = {
    MetricKind::ExecTime, MetricKind::MemPeak, MetricKind::MemAvg,
    MetricKind::IoTime, MetricKind::NetTransfer};

inline std::string metric_name(MetricKind m) {
  switch (m) {
    case MetricKind::ExecTime: return "exec_time";
    case MetricKind::MemPeak: return "mem_peak";
    case MetricKind::MemAvg: return "mem_avg";
    case MetricKind::IoTime: return "io_time";
    case MetricKind::NetTransfer: return "net_transfer";
  }
  return "unknown";
}

inline MetricKind metric_from_name(const std::string& s) {
  for (MetricKind m : kAllMetrics)
    if (metric_name(m) == s) return m;
  throw ParseError("unknown metric '" + s + "'");
}

// One observation (or prediction) of the five per-step metrics. Memory values
// are kept as doubles so noiseless oracle outputs and model means survive
// round-trips without quantization.
struct MetricVector {
  double exec_time_s = 0.0;
  double mem_peak_bytes = 0.0;
  double mem_avg_bytes = 0.0;
  double io_time_s = 0.0;
  double net_transfer_s = 0.0;

  double get(MetricKind m) const {
    switch (m) {
      case MetricKind::ExecTime: return exec_time_s;
      case MetricKind::MemPeak: return mem_peak_bytes;
      case MetricKind::MemAvg: return mem_avg_bytes;
      case MetricKind::IoTime: return io_time_s;
      case MetricKind::NetTransfer: return net_transfer_s;
    }
    return 0.0;
  }

  void set(MetricKind m, double v) {
    switch (m) {
      case MetricKind::ExecTime: exec_time_s = v; break;
      case MetricKind::MemPeak: mem_peak_bytes = v; break;
      case MetricKind::MemAvg: mem_avg_bytes = v; break;
      case MetricKind::IoTime: io_time_s = v; break;
      case MetricKind::NetTransfer: net_transfer_s = v; break;
    }
  }

  bool operator==(const MetricVector&) const = default;
};

inline void validate_metric_vector(const MetricVector& m, const std::string& ctx) {
  for (MetricKind k : kAllMetrics) {
    double v = m.get(k);
    if (!std::isfinite(v) || v < 0.0)
      throw ParseError(ctx + ": metric " + metric_name(k) + " must be finite and non-negative");
  }
  if (m.mem_avg_bytes > m.mem_peak_bytes)
    throw ParseError(ctx + ": mem_avg_bytes exceeds mem_peak_bytes");
}

// One profiled sub-module execution on one node.
struct ProfileRecord {
  std::string record_id;
  std::string resource_class;
  AppFeatures app;
  StaticFeatures static_f;
  DynFeatures dyn;
  MetricVector observed;
  double timestamp = 0.0;  // seconds since epoch
  std::map<std::string, std::string> meta;

  bool operator==(const ProfileRecord&) const = default;
};

// One observed data transfer between two nodes, keyed by the receiving
// node's resource class. Kept separate from ProfileRecord because it
// involves the network features of both endpoints.
struct TransferRecord {
  std::string record_id;
  std::string to_resource_class;
  std::uint64_t payload_bytes = 0;
  double from_net_bw_bytes_per_s = 1.0;
  double from_net_latency_s = 0.0;
  double to_net_bw_bytes_per_s = 1.0;
  double to_net_latency_s = 0.0;
  double observed_s = 0.0;
  double timestamp = 0.0;
  std::map<std::string, std::string> meta;

  bool operator==(const TransferRecord&) const = default;
};

inline json metric_vector_to_json(const MetricVector& m) {
  return json{{"exec_time_s", m.exec_time_s},
              {"mem_peak_bytes", m.mem_peak_bytes},
              {"mem_avg_bytes", m.mem_avg_bytes},
              {"io_time_s", m.io_time_s},
              {"net_transfer_s", m.net_transfer_s}};
}

inline MetricVector metric_vector_from_json(const json& j, const std::string& ctx) {
  try {
    MetricVector m;
    m.exec_time_s = j.at("exec_time_s").get<double>();
    m.mem_peak_bytes = j.at("mem_peak_bytes").get<double>();
    m.mem_avg_bytes = j.at("mem_avg_bytes").get<double>();
    m.io_time_s = j.at("io_time_s").get<double>();
    m.net_transfer_s = j.at("net_transfer_s").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": bad metric vector (" + e.what() + ")");
  }
}

inline json record_to_json(const ProfileRecord& r) {
  json j{{"v", 1},
         {"type", "exec"},
         {"record_id", r.record_id},
         {"resource_class", r.resource_class},
         {"app", app_features_to_json(r.app)},
         {"static", static_features_to_json(r.static_f)},
         {"dyn", dyn_features_to_json(r.dyn)},
         {"observed", metric_vector_to_json(r.observed)},
         {"ts", r.timestamp}};
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j;
}

inline ProfileRecord record_from_json(const json& j, const std::string& ctx) {
  try {
    ProfileRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.resource_class = j.at("resource_class").get<std::string>();
    r.app = app_features_from_json(j.at("app"), ctx);
    r.static_f = static_features_from_json(j.at("static"), ctx);
    r.dyn = dyn_features_from_json(j.at("dyn"), ctx);
    r.observed = metric_vector_from_json(j.at("observed"), ctx);
    r.timestamp = j.at("ts").get<double>();
    if (j.contains("meta")) r.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": bad record (" + e.what() + ")");
  }
}

inline json transfer_record_to_json(const TransferRecord& r) {
  json j{{"v", 1},
         {"type", "transfer"},
         {"record_id", r.record_id},
         {"to_resource_class", r.to_resource_class},
         {"payload_bytes", r.payload_bytes},
         {"from_net", json{{"bw_bytes_per_s", r.from_net_bw_bytes_per_s},
                           {"latency_s", r.from_net_latency_s}}},
         {"to_net", json{{"bw_bytes_per_s", r.to_net_bw_bytes_per_s},
                         {"latency_s", r.to_net_latency_s}}},
         {"observed_s", r.observed_s},
         {"ts", r.timestamp}};
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j;
}

inline TransferRecord transfer_record_from_json(const json& j, const std::string& ctx) {
  try {
    TransferRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.to_resource_class = j.at("to_resource_class").get<std::string>();
    r.payload_bytes = j.at("payload_bytes").get<std::uint64_t>();
    r.from_net_bw_bytes_per_s = j.at("from_net").at("bw_bytes_per_s").get<double>();
    r.from_net_latency_s = j.at("from_net").at("latency_s").get<double>();
    r.to_net_bw_bytes_per_s = j.at("to_net").at("bw_bytes_per_s").get<double>();
    r.to_net_latency_s = j.at("to_net").at("latency_s").get<double>();
    r.observed_s = j.at("observed_s").get<double>();
    r.timestamp = j.at("ts").get<double>();
    if (j.contains("meta")) r.meta = j.at("meta").get<std::map<std::string, std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": bad transfer record (" + e.what() + ")");
  }
}

}  // namespace prepcast
