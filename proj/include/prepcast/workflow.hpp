#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/json_util.hpp"

namespace prepcast {

inline constexpr int kMaxNestingDepth = 32;

// Application-independent characterization of one task's instruction load.
// instruction_mix is {fp, int, mem, branch, io} fractions summing to 1.
struct AppFeatures {
  std::uint64_t input_bytes = 0;
  std::uint64_t flop_count = 0;
  double branching_factor = 0.0;  // branches per 1000 instructions
  std::uint64_t io_bytes = 0;
  std::array<double, 5> instruction_mix{1.0, 0.0, 0.0, 0.0, 0.0};

  bool operator==(const AppFeatures&) const = default;
};

enum class TaskKind { Atomic, SubWorkflow };

struct WorkflowSpec;

struct TaskNode {
  std::string id;
  TaskKind kind = TaskKind::Atomic;
  AppFeatures app_features;         // Atomic only
  std::vector<WorkflowSpec> body;   // SubWorkflow only, exactly one element

  bool operator==(const TaskNode&) const = default;
};

struct DataEdge {
  std::string from;
  std::string to;
  std::uint64_t payload_bytes = 0;

  bool operator==(const DataEdge&) const = default;
};

struct WorkflowSpec {
  std::string name;
  std::vector<TaskNode> tasks;
  std::vector<DataEdge> edges;

  bool operator==(const WorkflowSpec&) const = default;
};

// Hardware description of one compute node.
struct StaticFeatures {
  std::int64_t cores = 1;
  double cpu_mhz = 1000.0;
  std::int64_t cache_kb = 1024;
  std::int64_t mem_total_bytes = 1;
  double disk_bw_bytes_per_s = 1.0;
  double net_bw_bytes_per_s = 1.0;
  double net_latency_s = 0.0;

  bool operator==(const StaticFeatures&) const = default;
};

// Run-time load on a node at (assumed) execution time.
struct DynFeatures {
  std::int64_t jobs_running = 0;
  double queue_wait_s = 0.0;
  double load_average = 0.0;
  std::int64_t mem_used_bytes = 0;

  bool operator==(const DynFeatures&) const = default;
};

struct ResourceNode {
  std::string id;
  std::string resource_class;
  StaticFeatures static_features;

  bool operator==(const ResourceNode&) const = default;
};

// ---------------------------------------------------------------------------
// validation

inline void validate_app_features(const AppFeatures& a, const std::string& ctx) {
  double sum = 0.0;
  for (double f : a.instruction_mix) {
    if (!(f >= 0.0 && f <= 1.0)) throw ParseError(ctx + ": instruction_mix fraction outside [0,1]");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ParseError(ctx + ": instruction_mix must sum to 1");
  if (!(a.branching_factor >= 0.0)) throw ParseError(ctx + ": negative branching_factor");
}

inline void validate_static_features(const StaticFeatures& s, const std::string& ctx) {
  if (s.cores <= 0) throw ParseError(ctx + ": cores must be positive");
  if (!(s.cpu_mhz > 0.0)) throw ParseError(ctx + ": cpu_mhz must be positive");
  if (s.cache_kb <= 0) throw ParseError(ctx + ": cache_kb must be positive");
  if (s.mem_total_bytes <= 0) throw ParseError(ctx + ": mem_total_bytes must be positive");
  if (!(s.disk_bw_bytes_per_s > 0.0)) throw ParseError(ctx + ": disk_bw_bytes_per_s must be positive");
  if (!(s.net_bw_bytes_per_s > 0.0)) throw ParseError(ctx + ": net_bw_bytes_per_s must be positive");
  if (!(s.net_latency_s >= 0.0)) throw ParseError(ctx + ": net_latency_s must be non-negative");
}

namespace detail {

inline void validate_level(const WorkflowSpec& w, int depth, const std::string& ctx) {
  if (depth > kMaxNestingDepth)
    throw DepthError(ctx + ": nesting depth exceeds " + std::to_string(kMaxNestingDepth));

  std::set<std::string> ids;
  for (const TaskNode& t : w.tasks) {
    if (t.id.empty()) throw ParseError(ctx + ": empty task id");
    if (!ids.insert(t.id).second) throw ParseError(ctx + ": duplicate task id '" + t.id + "'");
    if (t.kind == TaskKind::Atomic) {
      if (!t.body.empty()) throw ParseError(ctx + ": atomic task '" + t.id + "' carries a body");
      validate_app_features(t.app_features, ctx + "/" + t.id);
    } else {
      if (t.body.size() != 1)
        throw ParseError(ctx + ": sub-workflow task '" + t.id + "' must carry exactly one body");
      validate_level(t.body.front(), depth + 1, ctx + "/" + t.id);
    }
  }

  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& id : ids) indegree[id] = 0;
  for (const DataEdge& e : w.edges) {
    if (!ids.count(e.from)) throw DanglingEdgeError(ctx + ": edge from unknown task '" + e.from + "'");
    if (!ids.count(e.to)) throw DanglingEdgeError(ctx + ": edge to unknown task '" + e.to + "'");
    if (e.from == e.to) throw CycleError(ctx + ": self-loop on '" + e.from + "'");
    indegree[e.to]++;
    succ[e.from].push_back(e.to);
  }

  // Kahn's algorithm; anything left over sits on a cycle
  std::vector<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.push_back(id);
  std::size_t seen = 0;
  while (!ready.empty()) {
    std::string id = ready.back();
    ready.pop_back();
    ++seen;
    for (const std::string& nxt : succ[id])
      if (--indegree[nxt] == 0) ready.push_back(nxt);
  }
  if (seen != ids.size()) throw CycleError(ctx + ": edge set has a cycle");
}

}  // namespace detail

inline void validate_workflow(const WorkflowSpec& w) {
  detail::validate_level(w, 1, w.name.empty() ? std::string("workflow") : w.name);
}

// ---------------------------------------------------------------------------
// topological order, deterministic: ties broken by lexicographic id

inline std::vector<std::string> topo_order(const WorkflowSpec& w) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> succ;
  for (const TaskNode& t : w.tasks) indegree[t.id] = 0;
  for (const DataEdge& e : w.edges) {
    indegree[e.to]++;
    succ[e.from].push_back(e.to);
  }

  std::set<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.insert(id);

  std::vector<std::string> order;
  order.reserve(indegree.size());
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& nxt : succ[id])
      if (--indegree[nxt] == 0) ready.insert(nxt);
  }
  return order;
}

// ---------------------------------------------------------------------------
// flattening

namespace detail {

struct FlatPiece {
  std::vector<TaskNode> tasks;
  std::vector<DataEdge> edges;
  std::vector<std::string> entries;  // sources of the flattened form
  std::vector<std::string> exits;    // sinks of the flattened form
};

// Expands one level. Boundary rule: an edge into a sub-workflow attaches to
// every source of its body, an edge out of one leaves from every sink.
inline FlatPiece flatten_level(const WorkflowSpec& w, const std::string& prefix, int depth) {
  if (depth > kMaxNestingDepth)
    throw DepthError("flatten: nesting depth exceeds " + std::to_string(kMaxNestingDepth));

  FlatPiece out;
  std::map<std::string, std::vector<std::string>> entries_of, exits_of;

  for (const TaskNode& t : w.tasks) {
    std::string full = prefix + t.id;
    if (t.kind == TaskKind::Atomic) {
      TaskNode leaf = t;
      leaf.id = full;
      out.tasks.push_back(std::move(leaf));
      entries_of[t.id] = {full};
      exits_of[t.id] = {full};
    } else {
      FlatPiece inner = flatten_level(t.body.front(), full + "/", depth + 1);
      for (auto& it : inner.tasks) out.tasks.push_back(std::move(it));
      for (auto& ie : inner.edges) out.edges.push_back(std::move(ie));
      entries_of[t.id] = std::move(inner.entries);
      exits_of[t.id] = std::move(inner.exits);
    }
  }

  for (const DataEdge& e : w.edges) {
    std::vector<std::string> from = exits_of.at(e.from);
    std::vector<std::string> to = entries_of.at(e.to);
    std::sort(from.begin(), from.end());
    std::sort(to.begin(), to.end());
    for (const std::string& f : from)
      for (const std::string& t : to) out.edges.push_back({f, t, e.payload_bytes});
  }

  // local source/sink sets, in level task order
  std::set<std::string> has_in, has_out;
  for (const DataEdge& e : w.edges) {
    has_out.insert(e.from);
    has_in.insert(e.to);
  }
  for (const TaskNode& t : w.tasks) {
    if (!has_in.count(t.id))
      for (const std::string& s : entries_of[t.id]) out.entries.push_back(s);
    if (!has_out.count(t.id))
      for (const std::string& s : exits_of[t.id]) out.exits.push_back(s);
  }
  return out;
}

}  // namespace detail

// Replaces every sub-workflow node inline by its body, ids namespaced
// "parent/child". Result is depth-1 and flatten is idempotent.
inline WorkflowSpec flatten(const WorkflowSpec& w) {
  detail::FlatPiece piece = detail::flatten_level(w, "", 1);
  WorkflowSpec flat;
  flat.name = w.name;
  flat.tasks = std::move(piece.tasks);
  flat.edges = std::move(piece.edges);
  return flat;
}

// ---------------------------------------------------------------------------
// JSON serialization
//
// Workflow document:
//   {"v":1, "name":..., "tasks":[{"id","kind","app_features"|"body"}],
//    "edges":[{"from","to","payload_bytes"}]}
// Cluster document:
//   {"v":1, "nodes":[{"id","resource_class","static_features"}]}

inline json app_features_to_json(const AppFeatures& a) {
  return json{{"input_bytes", a.input_bytes},
              {"flop_count", a.flop_count},
              {"branching_factor", a.branching_factor},
              {"io_bytes", a.io_bytes},
              {"instruction_mix", a.instruction_mix}};
}

inline AppFeatures app_features_from_json(const json& j, const std::string& ctx) {
  try {
    AppFeatures a;
    a.input_bytes = j.at("input_bytes").get<std::uint64_t>();
    a.flop_count = j.at("flop_count").get<std::uint64_t>();
    a.branching_factor = j.at("branching_factor").get<double>();
    a.io_bytes = j.at("io_bytes").get<std::uint64_t>();
    auto mix = j.at("instruction_mix");
    if (!mix.is_array() || mix.size() != 5)
      throw ParseError(ctx + ": instruction_mix must be 5 fractions");
    for (int i = 0; i < 5; ++i) a.instruction_mix[i] = mix[i].get<double>();
    return a;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": bad app_features (" + e.what() + ")");
  }
}

inline json static_features_to_json(const StaticFeatures& s) {
  return json{{"cores", s.cores},
              {"cpu_mhz", s.cpu_mhz},
              {"cache_kb", s.cache_kb},
              {"mem_total_bytes", s.mem_total_bytes},
              {"disk_bw_bytes_per_s", s.disk_bw_bytes_per_s},
              {"net_bw_bytes_per_s", s.net_bw_bytes_per_s},
              {"net_latency_s", s.net_latency_s}};
}

inline StaticFeatures static_features_from_json(const json& j, const std::string& ctx) {
  try {
    StaticFeatures s;
    s.cores = j.at("cores").get<std::int64_t>();
    s.cpu_mhz = j.at("cpu_mhz").get<double>();
    s.cache_kb = j.at("cache_kb").get<std::int64_t>();
    s.mem_total_bytes = j.at("mem_total_bytes").get<std::int64_t>();
    s.disk_bw_bytes_per_s = j.at("disk_bw_bytes_per_s").get<double>();
    s.net_bw_bytes_per_s = j.at("net_bw_bytes_per_s").get<double>();
    s.net_latency_s = j.at("net_latency_s").get<double>();
    return s;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": bad static_features (" + e.what() + ")");
  }
}

inline json dyn_features_to_json(const DynFeatures& d) {
  return json{{"jobs_running", d.jobs_running},
              {"queue_wait_s", d.queue_wait_s},
              {"load_average", d.load_average},
              {"mem_used_bytes", d.mem_used_bytes}};
}

inline DynFeatures dyn_features_from_json(const json& j, const std::string& ctx) {
  try {
    DynFeatures d;
    d.jobs_running = j.at("jobs_running").get<std::int64_t>();
    d.queue_wait_s = j.at("queue_wait_s").get<double>();
    d.load_average = j.at("load_average").get<double>();
    d.mem_used_bytes = j.at("mem_used_bytes").get<std::int64_t>();
    return d;
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": bad dyn_features (" + e.what() + ")");
  }
}

namespace detail {

inline json workflow_body_to_json(const WorkflowSpec& w) {
  json tasks = json::array();
  for (const TaskNode& t : w.tasks) {
    json jt{{"id", t.id}};
    if (t.kind == TaskKind::Atomic) {
      jt["kind"] = "atomic";
      jt["app_features"] = app_features_to_json(t.app_features);
    } else {
      jt["kind"] = "sub_workflow";
      jt["body"] = workflow_body_to_json(t.body.front());
    }
    tasks.push_back(std::move(jt));
  }
  json edges = json::array();
  for (const DataEdge& e : w.edges)
    edges.push_back(json{{"from", e.from}, {"to", e.to}, {"payload_bytes", e.payload_bytes}});
  return json{{"name", w.name}, {"tasks", std::move(tasks)}, {"edges", std::move(edges)}};
}

inline WorkflowSpec workflow_body_from_json(const json& j, const std::string& ctx) {
  WorkflowSpec w;
  try {
    w.name = j.value("name", "");
    for (const json& jt : j.at("tasks")) {
      TaskNode t;
      t.id = jt.at("id").get<std::string>();
      std::string kind = jt.at("kind").get<std::string>();
      if (kind == "atomic") {
        t.kind = TaskKind::Atomic;
        t.app_features = app_features_from_json(jt.at("app_features"), ctx + "/" + t.id);
      } else if (kind == "sub_workflow") {
        t.kind = TaskKind::SubWorkflow;
        t.body.push_back(workflow_body_from_json(jt.at("body"), ctx + "/" + t.id));
      } else {
        throw ParseError(ctx + ": unknown task kind '" + kind + "'");
      }
      w.tasks.push_back(std::move(t));
    }
    for (const json& je : j.at("edges")) {
      DataEdge e;
      e.from = je.at("from").get<std::string>();
      e.to = je.at("to").get<std::string>();
      e.payload_bytes = je.at("payload_bytes").get<std::uint64_t>();
      w.edges.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ParseError(ctx + ": malformed workflow document (" + e.what() + ")");
  }
  return w;
}

}  // namespace detail

inline std::string serialize_workflow(const WorkflowSpec& w) {
  json j = detail::workflow_body_to_json(w);
  j["v"] = 1;
  return j.dump(2) + "\n";
}

inline WorkflowSpec parse_workflow(const std::string& text) {
  json j = parse_json_text(text, "workflow");
  require_v1(j, "workflow");
  WorkflowSpec w = detail::workflow_body_from_json(j, "workflow");
  validate_workflow(w);
  return w;
}

inline std::string serialize_cluster(const std::vector<ResourceNode>& nodes) {
  json arr = json::array();
  for (const ResourceNode& n : nodes)
    arr.push_back(json{{"id", n.id},
                       {"resource_class", n.resource_class},
                       {"static_features", static_features_to_json(n.static_features)}});
  return json{{"v", 1}, {"nodes", std::move(arr)}}.dump(2) + "\n";
}

inline std::vector<ResourceNode> parse_cluster(const std::string& text) {
  json j = parse_json_text(text, "cluster");
  require_v1(j, "cluster");
  std::vector<ResourceNode> nodes;
  std::set<std::string> ids;
  try {
    for (const json& jn : j.at("nodes")) {
      ResourceNode n;
      n.id = jn.at("id").get<std::string>();
      n.resource_class = jn.at("resource_class").get<std::string>();
      n.static_features = static_features_from_json(jn.at("static_features"), "cluster/" + n.id);
      if (!ids.insert(n.id).second) throw ParseError("cluster: duplicate node id '" + n.id + "'");
      validate_static_features(n.static_features, "cluster/" + n.id);
      nodes.push_back(std::move(n));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("cluster: malformed document (") + e.what() + ")");
  }
  return nodes;
}

}  // namespace prepcast
