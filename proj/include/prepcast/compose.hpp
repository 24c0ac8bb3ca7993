#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/prep.hpp"
#include "prepcast/record.hpp"
#include "prepcast/registry.hpp"
#include "prepcast/workflow.hpp"

namespace prepcast {

struct StepPrediction {
  std::string task_id;
  std::string node_id;
  std::string resource_class;
  MetricVector metrics;
  double start_s = 0.0;
  double finish_s = 0.0;
  bool used_fallback = false;

  bool operator==(const StepPrediction&) const = default;
};

struct TransferPrediction {
  std::string from_task;
  std::string to_task;
  std::uint64_t payload_bytes = 0;
  double transfer_s = 0.0;
  bool same_node = false;
  bool used_fallback = false;

  bool operator==(const TransferPrediction&) const = default;
};

// Collapsed view of one sub-workflow in a nested composition.
struct SubSummary {
  std::string path;
  double start_s = 0.0;
  double finish_s = 0.0;
  std::size_t n_steps = 0;

  bool operator==(const SubSummary&) const = default;
};

// Predicted timing graph: the answer to "what will this plan cost".
struct Ptg {
  std::string workflow_name;
  std::vector<StepPrediction> steps;  // topological order
  std::vector<TransferPrediction> transfers;
  std::vector<SubSummary> sub_workflows;  // nested composition only
  std::map<std::string, double> node_mem_peak_bytes;
  std::vector<std::string> critical_path;
  double makespan_s = 0.0;
  double total_transfer_s = 0.0;
  bool any_fallback = false;

  bool operator==(const Ptg&) const = default;
};

namespace detail {

inline std::pair<MetricVector, bool> predict_step(const AgentRegistry& reg,
                                                  const std::string& klass,
                                                  const AppFeatures& app,
                                                  const StaticFeatures& st,
                                                  const DynFeatures& dyn) {
  MetricVector m;
  bool fallback = false;
  for (MetricKind k : {MetricKind::ExecTime, MetricKind::MemPeak, MetricKind::MemAvg,
                       MetricKind::IoTime}) {
    Prediction p = reg.predict(klass, k, app, st, dyn);
    m.set(k, p.value);
    fallback = fallback || p.used_fallback;
  }
  // independent heads can cross; keep the average under the peak
  m.mem_avg_bytes = std::min(m.mem_avg_bytes, m.mem_peak_bytes);
  m.net_transfer_s = 0.0;
  return {m, fallback};
}

inline TransferPrediction predict_transfer_edge(const AgentRegistry& reg, const Prep& p,
                                                const std::string& from_node,
                                                const std::string& to_node,
                                                const std::string& from_task,
                                                const std::string& to_task,
                                                std::uint64_t payload) {
  TransferPrediction t;
  t.from_task = from_task;
  t.to_task = to_task;
  t.payload_bytes = payload;
  t.same_node = (from_node == to_node);
  if (t.same_node) return t;  // co-located movement costs nothing, structurally
  const ResourceNode& nf = prep_node(p, from_node);
  const ResourceNode& nt = prep_node(p, to_node);
  Prediction pr = reg.predict_transfer(
      nt.resource_class, payload, nf.static_features.net_bw_bytes_per_s,
      nf.static_features.net_latency_s, nt.static_features.net_bw_bytes_per_s,
      nt.static_features.net_latency_s);
  t.transfer_s = pr.value;
  t.used_fallback = pr.used_fallback;
  return t;
}

// Longest-path schedule: a step starts when its slowest inbound delivery
// lands. Also fills makespan.
inline void schedule_steps(std::vector<StepPrediction>& steps,
                           const std::vector<TransferPrediction>& transfers, Ptg& ptg) {
  std::map<std::string, std::size_t> step_at;
  for (std::size_t i = 0; i < steps.size(); ++i) step_at[steps[i].task_id] = i;

  std::map<std::string, std::vector<std::size_t>> inbound;
  for (std::size_t e = 0; e < transfers.size(); ++e)
    inbound[transfers[e].to_task].push_back(e);

  for (StepPrediction& s : steps) {
    double start = 0.0;
    for (std::size_t e : inbound[s.task_id]) {
      const TransferPrediction& t = transfers[e];
      start = std::max(start, steps[step_at.at(t.from_task)].finish_s + t.transfer_s);
    }
    s.start_s = start;
    s.finish_s = start + s.metrics.exec_time_s;
  }

  ptg.makespan_s = 0.0;
  for (const StepPrediction& s : steps) ptg.makespan_s = std::max(ptg.makespan_s, s.finish_s);
}

// Walks back from the latest-finishing sink along predecessors that achieve
// the start time. Ties go to the lexicographically smallest task id.
inline std::vector<std::string> critical_path(const std::vector<StepPrediction>& steps,
                                              const std::vector<TransferPrediction>& transfers) {
  if (steps.empty()) return {};
  std::map<std::string, const StepPrediction*> step_at;
  for (const StepPrediction& s : steps) step_at[s.task_id] = &s;
  std::map<std::string, std::vector<const TransferPrediction*>> inbound;
  for (const TransferPrediction& t : transfers) inbound[t.to_task].push_back(&t);

  const StepPrediction* end = nullptr;
  for (const StepPrediction& s : steps)
    if (!end || s.finish_s > end->finish_s ||
        (s.finish_s == end->finish_s && s.task_id < end->task_id))
      end = &s;

  std::vector<std::string> path{end->task_id};
  const StepPrediction* cur = end;
  while (true) {
    const StepPrediction* best = nullptr;
    for (const TransferPrediction* t : inbound[cur->task_id]) {
      const StepPrediction* pred = step_at.at(t->from_task);
      if (pred->finish_s + t->transfer_s == cur->start_s)
        if (!best || pred->task_id < best->task_id) best = pred;
    }
    if (!best) break;
    path.push_back(best->task_id);
    cur = best;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

// Peak simultaneous memory per node: each step is resident over [start,
// finish) with its predicted mem_peak; sweep the sum of residents, applying
// removals before additions at equal times so back-to-back steps do not
// stack. Zero-duration steps still floor the node at their own peak.
inline std::map<std::string, double> node_memory_peaks(const std::vector<StepPrediction>& steps) {
  struct Event {
    double time;
    int order;  // removals (0) before additions (1)
    double delta;
  };
  std::map<std::string, std::vector<Event>> events;
  std::map<std::string, double> peak;
  for (const StepPrediction& s : steps) {
    events[s.node_id].push_back({s.start_s, 1, s.metrics.mem_peak_bytes});
    events[s.node_id].push_back({s.finish_s, 0, -s.metrics.mem_peak_bytes});
    double& pk = peak[s.node_id];
    pk = std::max(pk, s.metrics.mem_peak_bytes);
  }
  for (auto& [node, evs] : events) {
    std::sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) {
      return a.time != b.time ? a.time < b.time : a.order < b.order;
    });
    double level = 0.0;
    for (const Event& e : evs) {
      level += e.delta;
      peak[node] = std::max(peak[node], level);
    }
  }
  return peak;
}

inline void finish_ptg(Ptg& ptg) {
  std::sort(ptg.transfers.begin(), ptg.transfers.end(),
            [](const TransferPrediction& a, const TransferPrediction& b) {
              if (a.from_task != b.from_task) return a.from_task < b.from_task;
              if (a.to_task != b.to_task) return a.to_task < b.to_task;
              return a.payload_bytes < b.payload_bytes;
            });
  ptg.total_transfer_s = 0.0;
  for (const TransferPrediction& t : ptg.transfers) {
    ptg.total_transfer_s += t.transfer_s;
    ptg.any_fallback = ptg.any_fallback || t.used_fallback;
  }
  for (const StepPrediction& s : ptg.steps) ptg.any_fallback = ptg.any_fallback || s.used_fallback;
  ptg.critical_path = critical_path(ptg.steps, ptg.transfers);
  ptg.node_mem_peak_bytes = node_memory_peaks(ptg.steps);
}

// Kahn over the plan's transfer edges, lexicographic tie-break.
inline std::vector<std::string> prep_topo_order(const Prep& p) {
  std::map<std::string, int> indegree;
  std::map<std::string, std::vector<std::string>> succ;
  for (const PrepStep& s : p.steps) indegree[s.task_id] = 0;
  for (const TransferEdge& e : p.transfers) {
    indegree[e.to_task]++;
    succ[e.from_task].push_back(e.to_task);
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    for (const std::string& nxt : succ[id])
      if (--indegree[nxt] == 0) ready.insert(nxt);
  }
  return order;
}

}  // namespace detail

// Predicts every step and edge of a fully bound plan and composes them into
// a schedule.
inline Ptg compose(const Prep& p, const AgentRegistry& reg) {
  validate_prep(p);
  if (!p.alternatives.empty())
    throw UnresolvedAlternativesError("compose: plan still has " +
                                      std::to_string(p.alternatives.size()) +
                                      " unresolved alternative groups");

  std::map<std::string, const PrepStep*> by_id;
  for (const PrepStep& s : p.steps) by_id[s.task_id] = &s;

  Ptg ptg;
  ptg.workflow_name = p.workflow_name;
  for (const std::string& id : detail::prep_topo_order(p)) {
    const PrepStep& ps = *by_id.at(id);
    const ResourceNode& node = prep_node(p, ps.node_id);
    StepPrediction sp;
    sp.task_id = ps.task_id;
    sp.node_id = ps.node_id;
    sp.resource_class = node.resource_class;
    auto [metrics, fallback] =
        detail::predict_step(reg, node.resource_class, ps.app, node.static_features, ps.dyn);
    sp.metrics = metrics;
    sp.used_fallback = fallback;
    ptg.steps.push_back(std::move(sp));
  }

  for (const TransferEdge& e : p.transfers)
    ptg.transfers.push_back(detail::predict_transfer_edge(
        reg, p, by_id.at(e.from_task)->node_id, by_id.at(e.to_task)->node_id, e.from_task,
        e.to_task, e.payload_bytes));

  detail::schedule_steps(ptg.steps, ptg.transfers, ptg);
  detail::finish_ptg(ptg);
  return ptg;
}

namespace detail {

// Ready-time event delivered into a (sub-)workflow: data of size payload
// leaves from_node when the upstream step finishes.
struct InboundEvent {
  double finish_s = 0.0;
  std::string from_node;
  std::string from_task;
  std::uint64_t payload = 0;
};

struct ExitEvent {
  double finish_s = 0.0;
  std::string node_id;
  std::string task_id;
};

// Recursive composer over the nested structure. Each level schedules its own
// tasks; sub-workflows receive their parents' inbound events at every body
// source and hand exit events back up from every body sink.
inline std::vector<ExitEvent> compose_level(
    const WorkflowSpec& w, const std::string& prefix,
    const std::vector<InboundEvent>& level_inbound, const Prep& p, const AgentRegistry& reg,
    Ptg& ptg) {
  std::map<std::string, const PrepStep*> by_id;
  for (const PrepStep& s : p.steps) by_id[s.task_id] = &s;
  std::map<std::string, const TaskNode*> local;
  for (const TaskNode& t : w.tasks) local[t.id] = &t;

  std::set<std::string> has_in, has_out;
  for (const DataEdge& e : w.edges) {
    has_in.insert(e.to);
    has_out.insert(e.from);
  }

  std::map<std::string, std::vector<InboundEvent>> inbox;
  for (const TaskNode& t : w.tasks)
    if (!has_in.count(t.id)) inbox[t.id] = level_inbound;

  std::map<std::string, std::vector<std::string>> succ;
  std::map<std::string, int> indegree;
  for (const TaskNode& t : w.tasks) indegree[t.id] = 0;
  for (const DataEdge& e : w.edges) {
    indegree[e.to]++;
    succ[e.from].push_back(e.to);
  }
  std::set<std::string> ready;
  for (const auto& [id, d] : indegree)
    if (d == 0) ready.insert(id);

  std::map<std::string, std::vector<ExitEvent>> exits_of;
  while (!ready.empty()) {
    std::string id = *ready.begin();
    ready.erase(ready.begin());
    const TaskNode& t = *local.at(id);
    std::string full = prefix + id;

    if (t.kind == TaskKind::Atomic) {
      const PrepStep& ps = *by_id.at(full);
      const ResourceNode& node = prep_node(p, ps.node_id);

      StepPrediction sp;
      sp.task_id = full;
      sp.node_id = ps.node_id;
      sp.resource_class = node.resource_class;
      auto [metrics, fallback] =
          predict_step(reg, node.resource_class, ps.app, node.static_features, ps.dyn);
      sp.metrics = metrics;
      sp.used_fallback = fallback;

      double start = 0.0;
      for (const InboundEvent& ev : inbox[id]) {
        TransferPrediction tp = predict_transfer_edge(reg, p, ev.from_node, ps.node_id,
                                                      ev.from_task, full, ev.payload);
        start = std::max(start, ev.finish_s + tp.transfer_s);
        ptg.transfers.push_back(std::move(tp));
      }
      sp.start_s = start;
      sp.finish_s = start + sp.metrics.exec_time_s;
      exits_of[id] = {{sp.finish_s, sp.node_id, full}};
      ptg.steps.push_back(std::move(sp));
    } else {
      std::vector<ExitEvent> inner =
          compose_level(t.body.front(), full + "/", inbox[id], p, reg, ptg);
      exits_of[id] = std::move(inner);

      SubSummary sum;
      sum.path = full;
      sum.start_s = std::numeric_limits<double>::infinity();
      for (const StepPrediction& s : ptg.steps) {
        if (s.task_id.rfind(full + "/", 0) != 0) continue;
        sum.start_s = std::min(sum.start_s, s.start_s);
        sum.finish_s = std::max(sum.finish_s, s.finish_s);
        sum.n_steps++;
      }
      if (sum.n_steps == 0) sum.start_s = 0.0;  // empty body
      ptg.sub_workflows.push_back(std::move(sum));
    }

    for (const std::string& nxt : succ[id]) {
      if (--indegree[nxt] == 0) ready.insert(nxt);
    }
    for (const DataEdge& e : w.edges) {
      if (e.from != id) continue;
      for (const ExitEvent& ex : exits_of[id])
        inbox[e.to].push_back({ex.finish_s, ex.node_id, ex.task_id, e.payload_bytes});
    }
  }

  std::vector<ExitEvent> out;
  for (const TaskNode& t : w.tasks)
    if (!has_out.count(t.id))
      for (const ExitEvent& ex : exits_of[t.id]) out.push_back(ex);
  return out;
}

}  // namespace detail

// Composes directly over the nested workflow, never flattening it. The plan
// still provides the leaf bindings (its step ids are the flattened ids), so
// this route and compose() answer the same question two different ways and
// must agree on every aggregate.
inline Ptg compose_nested(const WorkflowSpec& wf, const Prep& p, const AgentRegistry& reg) {
  validate_workflow(wf);
  validate_prep(p);
  if (!p.alternatives.empty())
    throw UnresolvedAlternativesError("compose_nested: plan still has unresolved alternatives");

  std::set<std::string> flat_ids, step_ids;
  for (const TaskNode& t : flatten(wf).tasks) flat_ids.insert(t.id);
  for (const PrepStep& s : p.steps) step_ids.insert(s.task_id);
  if (flat_ids != step_ids)
    throw ConfigError("compose_nested: plan does not bind this workflow's tasks");

  Ptg ptg;
  ptg.workflow_name = wf.name;
  detail::compose_level(wf, "", {}, p, reg, ptg);

  std::sort(ptg.steps.begin(), ptg.steps.end(),
            [](const StepPrediction& a, const StepPrediction& b) {
              return a.start_s != b.start_s ? a.start_s < b.start_s : a.task_id < b.task_id;
            });
  std::sort(ptg.sub_workflows.begin(), ptg.sub_workflows.end(),
            [](const SubSummary& a, const SubSummary& b) { return a.path < b.path; });
  ptg.makespan_s = 0.0;
  for (const StepPrediction& s : ptg.steps) ptg.makespan_s = std::max(ptg.makespan_s, s.finish_s);
  detail::finish_ptg(ptg);
  return ptg;
}

// Convenience route: bind the nested workflow with the given policy, then
// compose hierarchically. Equivalent to compose(plan(wf, ...)) by the
// flattening-equivalence property.
inline Ptg compose_nested(const WorkflowSpec& wf, const std::vector<ResourceNode>& cluster,
                          const PlanOptions& opts, const AgentRegistry& reg) {
  return compose_nested(wf, plan(wf, cluster, opts), reg);
}

// All placements of an underdetermined plan, best first: makespan, then
// total transfer, then the lexicographic node assignment.
struct AlternativeOutcome {
  Prep prep;
  Ptg ptg;
};

inline std::vector<AlternativeOutcome> compare_alternatives(const Prep& p,
                                                            const AgentRegistry& reg,
                                                            std::size_t cap = kAlternativeCap) {
  std::vector<AlternativeOutcome> out;
  for (Prep& variant : resolve_alternatives(p, cap)) {
    Ptg ptg = compose(variant, reg);
    out.push_back({std::move(variant), std::move(ptg)});
  }
  auto assignment = [](const Prep& q) {
    std::vector<std::string> a;
    for (const PrepStep& s : q.steps) a.push_back(s.node_id);
    return a;
  };
  std::sort(out.begin(), out.end(), [&](const AlternativeOutcome& a, const AlternativeOutcome& b) {
    if (a.ptg.makespan_s != b.ptg.makespan_s) return a.ptg.makespan_s < b.ptg.makespan_s;
    if (a.ptg.total_transfer_s != b.ptg.total_transfer_s)
      return a.ptg.total_transfer_s < b.ptg.total_transfer_s;
    return assignment(a.prep) < assignment(b.prep);
  });
  return out;
}

// ---------------------------------------------------------------------------
// prediction document

inline json ptg_to_json(const Ptg& ptg) {
  json steps = json::array();
  for (const StepPrediction& s : ptg.steps)
    steps.push_back(json{{"id", s.task_id},
                         {"node", s.node_id},
                         {"resource_class", s.resource_class},
                         {"start_s", s.start_s},
                         {"finish_s", s.finish_s},
                         {"metrics", metric_vector_to_json(s.metrics)},
                         {"used_fallback", s.used_fallback}});
  json transfers = json::array();
  for (const TransferPrediction& t : ptg.transfers)
    transfers.push_back(json{{"from", t.from_task},
                             {"to", t.to_task},
                             {"payload_bytes", t.payload_bytes},
                             {"transfer_s", t.transfer_s},
                             {"same_node", t.same_node},
                             {"used_fallback", t.used_fallback}});
  json subs = json::array();
  for (const SubSummary& s : ptg.sub_workflows)
    subs.push_back(json{{"path", s.path},
                        {"start_s", s.start_s},
                        {"finish_s", s.finish_s},
                        {"n_steps", s.n_steps}});
  return json{{"v", 1},
              {"workflow", ptg.workflow_name},
              {"steps", std::move(steps)},
              {"transfers", std::move(transfers)},
              {"sub_workflows", std::move(subs)},
              {"critical_path", ptg.critical_path},
              {"aggregates",
               {{"makespan_s", ptg.makespan_s},
                {"total_transfer_s", ptg.total_transfer_s},
                {"node_mem_peak_bytes", json(ptg.node_mem_peak_bytes)},
                {"any_fallback", ptg.any_fallback}}}};
}

}  // namespace prepcast
