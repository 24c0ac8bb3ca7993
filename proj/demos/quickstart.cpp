// End-to-end tour: simulate profiling data for two resource classes, train
// per-class agents, bind a small workflow to a cluster, predict its timing,
// and rank the open placement choices for one step.

#include <cstdio>

#include "prepcast/prepcast.hpp"

using namespace prepcast;

int main() {
  // a cluster of two machine generations
  StaticFeatures fast;
  fast.cores = 16;
  fast.cpu_mhz = 2600.0;
  fast.cache_kb = 20480;
  fast.mem_total_bytes = 64000000000ll;
  fast.disk_bw_bytes_per_s = 4e8;
  fast.net_bw_bytes_per_s = 4e9;
  fast.net_latency_s = 2e-6;

  StaticFeatures slow = fast;
  slow.cpu_mhz = 2100.0;
  slow.disk_bw_bytes_per_s = 2e8;

  std::vector<ResourceNode> cluster = {
      {"n1", "fast", fast}, {"n2", "fast", fast}, {"n3", "slow", slow}};

  // the "real" behavior of each class, used in place of live profiling
  OracleLaw law;
  law.name = "quickstart";
  law.seed = 7;
  law.noise_rel_sigma = 0.02;
  law.classes["fast"] = LawCoefficients{0.8, 1.0, 0.7, 0.08, 64e6, 1.0};
  law.classes["slow"] = LawCoefficients{1.6, 1.3, 0.7, 0.12, 96e6, 1.2};

  FeatureRanges ranges;
  ranges.flop_count = {1e9, 2e11};

  AgentRegistry reg;
  for (const std::string& klass : {"fast", "slow"}) {
    auto records = generate_dataset(law, klass, 400, ranges);
    ForestParams params;
    params.seed = 11;
    for (MetricKind m : {MetricKind::ExecTime, MetricKind::MemPeak, MetricKind::MemAvg,
                         MetricKind::IoTime})
      reg.put(klass, m, Agent{train_forest(records, m, params)});
    auto transfers = generate_transfer_dataset(law, klass, 400, ranges);
    reg.put_transfer(klass, Agent{train_transfer_forest(transfers, params)});
    std::printf("trained %zu-record agents for class '%s'\n", records.size(), klass.c_str());
  }

  // a four-step pipeline with a fan-out in the middle
  WorkflowSpec wf;
  wf.name = "quickstart";
  auto task = [](const char* id, std::uint64_t flops, std::uint64_t bytes) {
    TaskNode t;
    t.id = id;
    t.app_features.input_bytes = bytes;
    t.app_features.flop_count = flops;
    t.app_features.io_bytes = bytes / 4;
    return t;
  };
  wf.tasks = {task("ingest", 2e10, 5e8), task("clean", 4e10, 5e8), task("analyze", 9e10, 3e8),
              task("summarize", 1e10, 1e8)};
  wf.edges = {{"ingest", "clean", 500000000},
              {"clean", "analyze", 300000000},
              {"clean", "summarize", 100000000}};

  PlanOptions popts;
  popts.policy = PlanPolicy::Explicit;
  popts.explicit_map = {
      {"ingest", "n1"}, {"clean", "n1"}, {"analyze", "n2"}, {"summarize", "n3"}};
  Prep prep = plan(wf, cluster, popts);

  Ptg ptg = compose(prep, reg);
  std::printf("\npredicted makespan: %.3f s\n", ptg.makespan_s);
  for (const StepPrediction& s : ptg.steps)
    std::printf("  %-10s on %-3s start %8.3f finish %8.3f exec %7.3f mem_peak %.2e\n",
                s.task_id.c_str(), s.node_id.c_str(), s.start_s, s.finish_s,
                s.metrics.exec_time_s, s.metrics.mem_peak_bytes);
  std::printf("critical path:");
  for (const std::string& id : ptg.critical_path) std::printf(" %s", id.c_str());
  std::printf("\n");

  // leave 'analyze' open and let the ranker pick its node
  for (PrepStep& s : prep.steps)
    if (s.task_id == "analyze") s.node_id.clear();
  prep.alternatives = {{"analyze", {"n1", "n2", "n3"}}};

  std::printf("\nplacement choices for 'analyze':\n");
  for (const auto& [variant, vptg] : compare_alternatives(prep, reg)) {
    std::string node;
    for (const PrepStep& s : variant.steps)
      if (s.task_id == "analyze") node = s.node_id;
    std::printf("  analyze on %-3s -> makespan %.3f s, transfer total %.3f s\n", node.c_str(),
                vptg.makespan_s, vptg.total_transfer_s);
  }
  return 0;
}
