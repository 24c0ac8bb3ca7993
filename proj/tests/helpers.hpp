#pragma once

// Shared plumbing for the test binaries: scratch directories, CLI invocation,
// small fixture builders, exact-recall agent registries and an exhaustive
// longest-path checker that is deliberately independent of the composer.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "prepcast/prepcast.hpp"

namespace testutil {

using namespace prepcast;

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "prepcast-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
  int code = -1;
  std::string out;  // stdout and stderr combined
};

inline RunResult run_cmd(const std::string& cmd) {
  RunResult res;
  std::string full = cmd + " 2>&1";
  FILE* p = ::popen(full.c_str(), "r");
  if (!p) throw std::runtime_error("popen failed for: " + cmd);
  char buf[4096];
  std::size_t n;
  while ((n = ::fread(buf, 1, sizeof buf, p)) > 0) res.out.append(buf, n);
  int status = ::pclose(p);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

// ---------------------------------------------------------------------------
// small builders

// Valid app features whose flop count is unique per `uniq`, so feature rows
// never collide across tasks.
inline AppFeatures make_app(std::uint64_t uniq) {
  AppFeatures a;
  a.input_bytes = 1'000'000 + uniq;
  a.flop_count = (uniq + 1) * 1'000'000'000ull;
  a.branching_factor = 5.0;
  a.io_bytes = 500'000 + uniq;
  a.instruction_mix = {0.5, 0.2, 0.2, 0.05, 0.05};
  return a;
}

inline StaticFeatures make_static(double mhz = 2500.0, double disk_bw = 3e8) {
  StaticFeatures s;
  s.cores = 16;
  s.cpu_mhz = mhz;
  s.cache_kb = 8192;
  s.mem_total_bytes = 64'000'000'000;
  s.disk_bw_bytes_per_s = disk_bw;
  s.net_bw_bytes_per_s = 1e9;
  s.net_latency_s = 1e-4;
  return s;
}

inline std::vector<ResourceNode> make_cluster(int n, const std::string& klass = "c") {
  std::vector<ResourceNode> out;
  for (int i = 0; i < n; ++i)
    out.push_back({"n" + std::to_string(i + 1), klass, make_static()});
  return out;
}

// ---------------------------------------------------------------------------
// exact-recall registries
//
// A one-tree forest with min_leaf 1, no bootstrap and the full feature set
// reproduces each distinct training row's target exactly. Pinning a chosen
// value per task (and per payload) lets scheduling tests drive the real
// composer with known numbers.

struct ValueBook {
  std::map<std::string, double> exec_of;    // flattened task id -> seconds
  std::map<std::uint64_t, double> xfer_of;  // payload bytes -> cross-node seconds
};

inline ForestParams memo_params() {
  ForestParams p;
  p.n_trees = 1;
  p.max_depth = 64;
  p.min_leaf = 1;
  p.feature_subsample = int(kFeatureDim);  // capped at the row dim when smaller
  p.bootstrap = false;
  return p;
}

inline AgentRegistry memorizing_registry(const Prep& p, const ValueBook& book) {
  using Rows = std::pair<std::vector<std::vector<double>>, std::vector<double>>;

  std::map<std::string, Rows> step_rows;
  for (const PrepStep& s : p.steps) {
    const ResourceNode& n = prep_node(p, s.node_id);
    FeatureRow x = featurize(s.app, n.static_features, s.dyn);
    Rows& bucket = step_rows[n.resource_class];
    bucket.first.emplace_back(x.begin(), x.end());
    bucket.second.push_back(book.exec_of.at(s.task_id));
  }

  std::map<std::string, const PrepStep*> by_id;
  for (const PrepStep& s : p.steps) by_id[s.task_id] = &s;
  std::map<std::string, Rows> xfer_rows;
  for (const TransferEdge& e : p.transfers) {
    const PrepStep& sf = *by_id.at(e.from_task);
    const PrepStep& st = *by_id.at(e.to_task);
    if (sf.node_id == st.node_id) continue;  // structurally zero, never predicted
    const ResourceNode& nf = prep_node(p, sf.node_id);
    const ResourceNode& nt = prep_node(p, st.node_id);
    TransferRow x = transfer_featurize(
        e.payload_bytes, nf.static_features.net_bw_bytes_per_s, nf.static_features.net_latency_s,
        nt.static_features.net_bw_bytes_per_s, nt.static_features.net_latency_s);
    Rows& bucket = xfer_rows[nt.resource_class];
    bucket.first.emplace_back(x.begin(), x.end());
    bucket.second.push_back(book.xfer_of.at(e.payload_bytes));
  }

  AgentRegistry reg;
  for (auto& [klass, bucket] : step_rows) {
    // phantom rows, far outside any real flop range, lift tiny plans over the
    // five-record training floor without disturbing real predictions
    std::uint64_t pad = 0;
    while (bucket.first.size() < kMinTrainRecords) {
      AppFeatures a = make_app(0);
      a.flop_count = 900'000'000'000'000ull + pad++;
      FeatureRow x = featurize(a, make_static(), DynFeatures{});
      bucket.first.emplace_back(x.begin(), x.end());
      bucket.second.push_back(bucket.second.front());
    }
    ForestModel m = train_forest_rows(bucket.first, bucket.second, memo_params());
    for (MetricKind k : {MetricKind::ExecTime, MetricKind::MemPeak, MetricKind::MemAvg,
                         MetricKind::IoTime})
      reg.put(klass, k, Agent{m});
  }
  for (auto& [klass, bucket] : xfer_rows) {
    std::uint64_t pad = 0;
    while (bucket.first.size() < kMinTrainRecords) {
      TransferRow x = transfer_featurize(900'000'000'000'000ull + pad++, 1e9, 1e-4, 1e9, 1e-4);
      bucket.first.emplace_back(x.begin(), x.end());
      bucket.second.push_back(bucket.second.front());
    }
    reg.put_transfer(klass, Agent{train_forest_rows(bucket.first, bucket.second, memo_params())});
  }
  return reg;
}

// ---------------------------------------------------------------------------
// independent makespan checker: enumerate every source-to-anywhere path and
// take the costliest, rather than running any longest-path recurrence

inline double enumerate_makespan(const Prep& p, const ValueBook& book) {
  std::map<std::string, std::string> node_of;
  std::map<std::string, int> indeg;
  for (const PrepStep& s : p.steps) {
    node_of[s.task_id] = s.node_id;
    indeg[s.task_id] = 0;
  }
  std::map<std::string, std::vector<std::pair<std::string, double>>> succ;
  for (const TransferEdge& e : p.transfers) {
    double x = node_of.at(e.from_task) == node_of.at(e.to_task)
                   ? 0.0
                   : book.xfer_of.at(e.payload_bytes);
    succ[e.from_task].push_back({e.to_task, x});
    indeg[e.to_task]++;
  }
  double longest = 0.0;
  std::function<void(const std::string&, double)> dfs = [&](const std::string& u, double acc) {
    double finish = acc + book.exec_of.at(u);
    longest = std::max(longest, finish);
    for (const auto& [v, x] : succ[u]) dfs(v, finish + x);
  };
  for (const auto& [id, d] : indeg)
    if (d == 0) dfs(id, 0.0);
  return longest;
}

// ---------------------------------------------------------------------------
// random structure generators (deterministic given the caller's PRNG state)

// Flat DAG bound to <= max_nodes nodes with random exec/transfer values.
// Out-degree is capped at 3 to keep exhaustive path enumeration cheap.
struct RandomPlan {
  Prep prep;
  ValueBook book;
};

inline RandomPlan random_plan(SplitMix64& g, int max_steps, int max_nodes) {
  int n_steps = 1 + int(g.next_below(std::uint64_t(max_steps)));
  int n_nodes = 1 + int(g.next_below(std::uint64_t(max_nodes)));

  RandomPlan rp;
  rp.prep.workflow_name = "random";
  for (int i = 0; i < n_nodes; ++i)
    rp.prep.nodes.push_back({"n" + std::to_string(i + 1), "c", make_static()});

  for (int i = 0; i < n_steps; ++i) {
    PrepStep s;
    s.task_id = (i < 10 ? "t0" : "t") + std::to_string(i);
    s.node_id = "n" + std::to_string(1 + g.next_below(std::uint64_t(n_nodes)));
    s.app = make_app(std::uint64_t(i));
    rp.prep.steps.push_back(std::move(s));
    rp.book.exec_of[rp.prep.steps.back().task_id] = g.uniform(0.1, 10.0);
  }

  std::uint64_t payload = 0;
  for (int i = 0; i < n_steps; ++i) {
    int out = 0;
    for (int j = i + 1; j < n_steps && out < 3; ++j) {
      if (g.next_double() >= 0.35) continue;
      TransferEdge e;
      e.from_task = rp.prep.steps[std::size_t(i)].task_id;
      e.to_task = rp.prep.steps[std::size_t(j)].task_id;
      e.payload_bytes = 1'000'000 + 1000 * ++payload;
      rp.book.xfer_of[e.payload_bytes] = g.uniform(0.01, 1.0);
      rp.prep.transfers.push_back(std::move(e));
      ++out;
    }
  }
  return rp;
}

// Random nested workflow, sub-workflow tasks allowed down to max_depth
// levels. Flop counts and payloads are globally unique via *uniq.
inline WorkflowSpec random_nested(SplitMix64& g, int depth, int max_depth, std::uint64_t& uniq) {
  WorkflowSpec w;
  w.name = depth == 1 ? "nested" : "body";
  int k = 2 + int(g.next_below(3));  // 2..4 tasks
  for (int i = 0; i < k; ++i) {
    TaskNode t;
    t.id = "t" + std::to_string(i);
    if (depth < max_depth && g.next_double() < 0.35) {
      t.kind = TaskKind::SubWorkflow;
      t.body.push_back(random_nested(g, depth + 1, max_depth, uniq));
    } else {
      t.kind = TaskKind::Atomic;
      t.app_features = make_app(++uniq);
    }
    w.tasks.push_back(std::move(t));
  }
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if (g.next_double() < 0.45)
        w.edges.push_back({"t" + std::to_string(i), "t" + std::to_string(j),
                           1'000'000 + 1000 * ++uniq});
  return w;
}

// Chosen values for every flattened step and payload of a nested workflow's
// plan, to drive both composition routes with the same numbers.
inline ValueBook book_for_plan(SplitMix64& g, const Prep& p) {
  ValueBook book;
  for (const PrepStep& s : p.steps) book.exec_of[s.task_id] = g.uniform(0.1, 10.0);
  for (const TransferEdge& e : p.transfers)
    if (!book.xfer_of.count(e.payload_bytes))
      book.xfer_of[e.payload_bytes] = g.uniform(0.01, 1.0);
  return book;
}

inline std::string read_file(const std::string& path) { return read_text_file(path); }

}  // namespace testutil
