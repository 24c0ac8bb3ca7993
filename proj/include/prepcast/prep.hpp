#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/workflow.hpp"

namespace prepcast {

// One flattened task bound (or bindable) to a concrete node.
struct PrepStep {
  std::string task_id;
  std::string node_id;  // empty while an alternative group covers the task
  AppFeatures app;
  DynFeatures dyn;

  bool operator==(const PrepStep&) const = default;
};

struct TransferEdge {
  std::string from_task;
  std::string to_task;
  std::uint64_t payload_bytes = 0;

  bool operator==(const TransferEdge&) const = default;
};

struct AlternativeGroup {
  std::string task_id;
  std::vector<std::string> candidate_nodes;

  bool operator==(const AlternativeGroup&) const = default;
};

// Physical resource execution plan: a flattened workflow, its data movement
// edges, the cluster it is bound to, and any still-open placement choices.
struct Prep {
  std::string workflow_name;
  std::vector<PrepStep> steps;  // topological order
  std::vector<TransferEdge> transfers;
  std::vector<AlternativeGroup> alternatives;
  std::vector<ResourceNode> nodes;

  bool operator==(const Prep&) const = default;
};

enum class PlanPolicy { Explicit, RoundRobin, AllCandidates };

struct PlanOptions {
  PlanPolicy policy = PlanPolicy::RoundRobin;
  std::map<std::string, std::string> explicit_map;  // flattened task id -> node id
  std::map<std::string, DynFeatures> dyn_map;       // optional per-task load assumptions
};

inline constexpr std::size_t kAlternativeCap = 10000;

inline const ResourceNode& prep_node(const Prep& p, const std::string& node_id) {
  for (const ResourceNode& n : p.nodes)
    if (n.id == node_id) return n;
  throw UnknownNodeError("plan references unknown node '" + node_id + "'");
}

inline void validate_prep(const Prep& p) {
  if (p.nodes.empty()) throw ConfigError("plan has no cluster nodes");
  std::set<std::string> node_ids;
  for (const ResourceNode& n : p.nodes) {
    if (!node_ids.insert(n.id).second)
      throw ParseError("plan: duplicate node id '" + n.id + "'");
    validate_static_features(n.static_features, "plan/" + n.id);
  }

  std::set<std::string> alt_tasks;
  for (const AlternativeGroup& g : p.alternatives) {
    if (g.candidate_nodes.empty())
      throw ParseError("plan: alternative group for '" + g.task_id + "' has no candidates");
    if (!alt_tasks.insert(g.task_id).second)
      throw ParseError("plan: duplicate alternative group for '" + g.task_id + "'");
    for (const std::string& c : g.candidate_nodes)
      if (!node_ids.count(c))
        throw UnknownNodeError("plan: alternative for '" + g.task_id +
                               "' names unknown node '" + c + "'");
  }

  std::set<std::string> task_ids;
  for (const PrepStep& s : p.steps) {
    if (s.task_id.empty()) throw ParseError("plan: empty task id");
    if (!task_ids.insert(s.task_id).second)
      throw ParseError("plan: duplicate step '" + s.task_id + "'");
    validate_app_features(s.app, "plan/" + s.task_id);
    if (s.node_id.empty()) {
      if (!alt_tasks.count(s.task_id))
        throw UncoveredTaskError("plan: step '" + s.task_id +
                                 "' has no node and no alternative group");
    } else if (!node_ids.count(s.node_id)) {
      throw UnknownNodeError("plan: step '" + s.task_id + "' assigned to unknown node '" +
                             s.node_id + "'");
    }
  }
  for (const std::string& t : alt_tasks)
    if (!task_ids.count(t))
      throw ParseError("plan: alternative group names unknown task '" + t + "'");

  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> succ;
  for (const auto& id : task_ids) indegree[id] = 0;
  for (const TransferEdge& e : p.transfers) {
    if (!task_ids.count(e.from_task))
      throw DanglingEdgeError("plan: transfer from unknown task '" + e.from_task + "'");
    if (!task_ids.count(e.to_task))
      throw DanglingEdgeError("plan: transfer to unknown task '" + e.to_task + "'");
    if (e.from_task == e.to_task) throw CycleError("plan: self-loop on '" + e.from_task + "'");
    indegree[e.to_task]++;
    succ[e.from_task].push_back(e.to_task);
  }
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
  if (seen != task_ids.size()) throw CycleError("plan: transfer edges form a cycle");
}

// Binds a workflow to a cluster. The workflow is flattened first, so the
// plan's steps are always atomic tasks in deterministic topological order.
inline Prep plan(const WorkflowSpec& wf, const std::vector<ResourceNode>& cluster,
                 const PlanOptions& opts = {}) {
  validate_workflow(wf);
  if (cluster.empty()) throw ConfigError("plan: cluster has no nodes");

  WorkflowSpec flat = flatten(wf);
  std::vector<std::string> order = topo_order(flat);
  std::map<std::string, const TaskNode*> by_id;
  for (const TaskNode& t : flat.tasks) by_id[t.id] = &t;

  std::vector<std::string> node_ids;
  for (const ResourceNode& n : cluster) node_ids.push_back(n.id);
  std::sort(node_ids.begin(), node_ids.end());

  Prep p;
  p.workflow_name = wf.name;
  p.nodes = cluster;

  std::size_t at = 0;
  for (const std::string& id : order) {
    PrepStep s;
    s.task_id = id;
    s.app = by_id.at(id)->app_features;
    if (auto it = opts.dyn_map.find(id); it != opts.dyn_map.end()) s.dyn = it->second;
    switch (opts.policy) {
      case PlanPolicy::Explicit: {
        auto it = opts.explicit_map.find(id);
        if (it == opts.explicit_map.end())
          throw UncoveredTaskError("plan: no node mapping for task '" + id + "'");
        s.node_id = it->second;
        break;
      }
      case PlanPolicy::RoundRobin:
        s.node_id = node_ids[at++ % node_ids.size()];
        break;
      case PlanPolicy::AllCandidates:
        p.alternatives.push_back({id, node_ids});
        break;
    }
    p.steps.push_back(std::move(s));
  }

  for (const DataEdge& e : flat.edges) p.transfers.push_back({e.from, e.to, e.payload_bytes});

  validate_prep(p);
  return p;
}

// Expands open placement choices into fully bound plans, enumerating the
// cartesian product of candidates. Groups are visited in task-id order and
// candidates in the given order, the last group varying fastest, so the
// result sequence is reproducible.
inline std::vector<Prep> resolve_alternatives(const Prep& p,
                                              std::size_t cap = kAlternativeCap) {
  validate_prep(p);
  if (p.alternatives.empty()) return {p};

  std::vector<AlternativeGroup> groups = p.alternatives;
  std::sort(groups.begin(), groups.end(),
            [](const AlternativeGroup& a, const AlternativeGroup& b) {
              return a.task_id < b.task_id;
            });

  std::size_t total = 1;
  for (const AlternativeGroup& g : groups) {
    if (g.candidate_nodes.size() > cap / total)
      throw ExplosionError("plan: alternative expansion exceeds cap of " + std::to_string(cap));
    total *= g.candidate_nodes.size();
  }

  std::map<std::string, std::size_t> step_of;
  for (std::size_t i = 0; i < p.steps.size(); ++i) step_of[p.steps[i].task_id] = i;

  std::vector<Prep> out;
  out.reserve(total);
  std::vector<std::size_t> pick(groups.size(), 0);
  for (std::size_t done = 0; done < total; ++done) {
    Prep q = p;
    q.alternatives.clear();
    for (std::size_t g = 0; g < groups.size(); ++g)
      q.steps[step_of.at(groups[g].task_id)].node_id = groups[g].candidate_nodes[pick[g]];
    out.push_back(std::move(q));

    for (std::size_t g = groups.size(); g-- > 0;) {
      if (++pick[g] < groups[g].candidate_nodes.size()) break;
      pick[g] = 0;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// plan document:
//   {"v":1, "workflow":..., "steps":[{"task_id","node_id","app","dyn"}],
//    "transfers":[{"from","to","payload_bytes"}],
//    "alternatives":[{"task_id","candidates"}], "nodes":[...]}

inline json prep_to_json(const Prep& p) {
  json steps = json::array();
  for (const PrepStep& s : p.steps)
    steps.push_back(json{{"task_id", s.task_id},
                         {"node_id", s.node_id},
                         {"app", app_features_to_json(s.app)},
                         {"dyn", dyn_features_to_json(s.dyn)}});
  json transfers = json::array();
  for (const TransferEdge& e : p.transfers)
    transfers.push_back(
        json{{"from", e.from_task}, {"to", e.to_task}, {"payload_bytes", e.payload_bytes}});
  json alts = json::array();
  for (const AlternativeGroup& g : p.alternatives)
    alts.push_back(json{{"task_id", g.task_id}, {"candidates", g.candidate_nodes}});
  json nodes = json::array();
  for (const ResourceNode& n : p.nodes)
    nodes.push_back(json{{"id", n.id},
                         {"resource_class", n.resource_class},
                         {"static_features", static_features_to_json(n.static_features)}});
  return json{{"v", 1},
              {"workflow", p.workflow_name},
              {"steps", std::move(steps)},
              {"transfers", std::move(transfers)},
              {"alternatives", std::move(alts)},
              {"nodes", std::move(nodes)}};
}

inline Prep prep_from_json(const json& j) {
  require_v1(j, "plan");
  Prep p;
  try {
    p.workflow_name = j.value("workflow", "");
    for (const json& js : j.at("steps")) {
      PrepStep s;
      s.task_id = js.at("task_id").get<std::string>();
      s.node_id = js.value("node_id", "");
      s.app = app_features_from_json(js.at("app"), "plan/" + s.task_id);
      s.dyn = dyn_features_from_json(js.at("dyn"), "plan/" + s.task_id);
      p.steps.push_back(std::move(s));
    }
    for (const json& je : j.at("transfers")) {
      TransferEdge e;
      e.from_task = je.at("from").get<std::string>();
      e.to_task = je.at("to").get<std::string>();
      e.payload_bytes = je.at("payload_bytes").get<std::uint64_t>();
      p.transfers.push_back(std::move(e));
    }
    for (const json& jg : j.at("alternatives")) {
      AlternativeGroup g;
      g.task_id = jg.at("task_id").get<std::string>();
      g.candidate_nodes = jg.at("candidates").get<std::vector<std::string>>();
      p.alternatives.push_back(std::move(g));
    }
    for (const json& jn : j.at("nodes")) {
      ResourceNode n;
      n.id = jn.at("id").get<std::string>();
      n.resource_class = jn.at("resource_class").get<std::string>();
      n.static_features = static_features_from_json(jn.at("static_features"), "plan/" + n.id);
      p.nodes.push_back(std::move(n));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("plan: malformed document (") + e.what() + ")");
  }
  validate_prep(p);
  return p;
}

inline std::string serialize_prep(const Prep& p) { return prep_to_json(p).dump(2) + "\n"; }

inline Prep parse_prep(const std::string& text) {
  return prep_from_json(parse_json_text(text, "plan"));
}

}  // namespace prepcast
