// prepcast CLI: plan | simulate | profile | train | predict | compare |
// evaluate | report. Exit codes: 0 success, 1 usage error, 2 data or model
// error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prepcast/prepcast.hpp"

namespace pc = prepcast;

namespace {

std::string fmt_double(double v) { return pc::json(v).dump(); }

void print_report_text(const pc::EvalReport& report) {
  std::printf("%-16s %-12s %-7s %10s %14s %7s %5s %5s\n", "class", "metric", "model", "mape_pct",
              "rmse", "n_test", "excl", "fb%");
  for (const pc::EvalCell& c : report.cells)
    std::printf("%-16s %-12s %-7s %10.3f %14.6g %7zu %5zu %5.1f\n", c.resource_class.c_str(),
                pc::metric_name(c.metric).c_str(), c.model.c_str(), c.mape_pct, c.rmse, c.n_test,
                c.n_excluded, 100.0 * c.fallback_rate);
  if (report.law_mismatch) std::printf("note: law-mismatch between train and test records\n");
}

// Loads an existing model directory if present so repeated `train` calls
// accumulate agents instead of clobbering each other.
pc::AgentRegistry load_or_empty(const std::string& dir) {
  if (std::filesystem::is_directory(dir)) return pc::AgentRegistry::load(dir);
  return pc::AgentRegistry{};
}

struct ForestFlags {
  int trees = 100;
  int max_depth = 12;
  int min_leaf = 2;
  int subsample = 0;
  std::uint64_t seed = 0;
  bool no_bootstrap = false;

  // seed_flag is overridable because `evaluate` already owns --seed for the
  // held-out split and CLI11 refuses duplicate option names.
  void attach(CLI::App* cmd, const std::string& seed_flag = "--seed") {
    cmd->add_option("--trees", trees, "number of trees");
    cmd->add_option("--max-depth", max_depth, "tree depth limit");
    cmd->add_option("--min-leaf", min_leaf, "minimum samples per leaf");
    cmd->add_option("--subsample", subsample, "features per split (0 = dim/3)");
    cmd->add_option(seed_flag, seed, "training rng seed");
    cmd->add_flag("--no-bootstrap", no_bootstrap, "train every tree on the full dataset");
  }

  pc::ForestParams params() const {
    pc::ForestParams p;
    p.n_trees = trees;
    p.max_depth = max_depth;
    p.min_leaf = min_leaf;
    p.feature_subsample = subsample;
    p.seed = seed;
    p.bootstrap = !no_bootstrap;
    return p;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prepcast: resource-centric workflow performance prediction"};
  app.require_subcommand(1);

  // ---- plan ----
  auto* plan_cmd = app.add_subcommand("plan", "bind a workflow to cluster nodes");
  std::string plan_wf, plan_cluster, plan_out, plan_policy = "round-robin", plan_map;
  plan_cmd->add_option("--workflow", plan_wf, "workflow JSON")->required();
  plan_cmd->add_option("--cluster", plan_cluster, "cluster JSON")->required();
  plan_cmd->add_option("--policy", plan_policy, "placement policy")
      ->check(CLI::IsMember({"explicit", "round-robin", "all-candidates"}));
  plan_cmd->add_option("--map", plan_map, "task->node JSON object (explicit policy)");
  plan_cmd->add_option("-o,--out", plan_out, "output plan path")->required();
  plan_cmd->callback([&] {
    pc::WorkflowSpec wf = pc::parse_workflow(pc::read_text_file(plan_wf));
    std::vector<pc::ResourceNode> cluster = pc::parse_cluster(pc::read_text_file(plan_cluster));
    pc::PlanOptions opts;
    if (plan_policy == "explicit") {
      opts.policy = pc::PlanPolicy::Explicit;
      if (plan_map.empty()) throw pc::ConfigError("explicit policy needs --map");
      pc::json jmap = pc::load_json_file(plan_map);  // keep alive: items() only borrows
      for (const auto& [task, node] : jmap.items())
        opts.explicit_map[task] = node.get<std::string>();
    } else if (plan_policy == "all-candidates") {
      opts.policy = pc::PlanPolicy::AllCandidates;
    } else {
      opts.policy = pc::PlanPolicy::RoundRobin;
    }
    pc::Prep p = pc::plan(wf, cluster, opts);
    pc::write_text_file(plan_out, pc::serialize_prep(p));
    std::printf("plan: %zu steps, %zu transfers, %zu alternative groups -> %s\n", p.steps.size(),
                p.transfers.size(), p.alternatives.size(), plan_out.c_str());
  });

  // ---- simulate ----
  auto* sim_cmd = app.add_subcommand("simulate", "generate synthetic oracle records");
  std::string sim_law, sim_out;
  std::vector<std::string> sim_classes;
  int sim_n = 100, sim_transfers = 0;
  std::uint64_t sim_seed = 0;
  double sim_noise = -1.0;
  sim_cmd->add_option("--law", sim_law, "oracle law JSON")->required();
  sim_cmd->add_option("--class", sim_classes, "resource class (repeatable; default: all in law)");
  sim_cmd->add_option("--n", sim_n, "records per class");
  sim_cmd->add_option("--transfers", sim_transfers, "transfer records per class");
  auto* sim_seed_opt = sim_cmd->add_option("--seed", sim_seed, "override the law's seed");
  auto* sim_noise_opt = sim_cmd->add_option("--noise", sim_noise, "override noise_rel_sigma");
  sim_cmd->add_option("-o,--out", sim_out, "output JSON-lines repo")->required();
  sim_cmd->callback([&] {
    pc::json jlaw = pc::load_json_file(sim_law);
    pc::OracleLaw law = pc::law_from_json(jlaw);
    pc::FeatureRanges ranges =
        jlaw.contains("ranges") ? pc::ranges_from_json(jlaw.at("ranges")) : pc::FeatureRanges{};
    if (sim_seed_opt->count()) law.seed = sim_seed;
    if (sim_noise_opt->count()) law.noise_rel_sigma = sim_noise;
    if (sim_classes.empty())
      for (const auto& [name, c] : law.classes) sim_classes.push_back(name);

    std::string out;
    std::size_t n_exec = 0, n_xfer = 0;
    for (const std::string& klass : sim_classes) {
      for (const pc::ProfileRecord& r : pc::generate_dataset(law, klass, sim_n, ranges)) {
        out += pc::record_to_json(r).dump() + "\n";
        ++n_exec;
      }
      if (sim_transfers > 0)
        for (const pc::TransferRecord& r :
             pc::generate_transfer_dataset(law, klass, sim_transfers, ranges)) {
          out += pc::transfer_record_to_json(r).dump() + "\n";
          ++n_xfer;
        }
    }
    pc::write_text_file(sim_out, out);
    std::printf("simulate: wrote %zu exec + %zu transfer records -> %s\n", n_exec, n_xfer,
                sim_out.c_str());
  });

  // ---- profile ----
  auto* prof_cmd = app.add_subcommand("profile", "run a command and record its footprint");
  std::string prof_repo, prof_class = "local", prof_sidecar, prof_proc_root = "/proc";
  double prof_interval = 0.2, prof_io_s = 0.0, prof_net_s = 0.0, prof_branching = 0.0;
  std::uint64_t prof_input = 0, prof_flops = 0, prof_io_bytes = 0;
  std::vector<std::string> prof_args;
  prof_cmd->add_option("--repo", prof_repo, "JSON-lines repo to append to")
      ->envname("PREPCAST_REPO")
      ->required();
  prof_cmd->add_option("--class", prof_class, "resource class label");
  prof_cmd->add_option("--interval", prof_interval, "sampling interval seconds (>= 0.01)");
  prof_cmd->add_option("--sidecar", prof_sidecar, "static-feature sidecar JSON");
  prof_cmd->add_option("--proc-root", prof_proc_root, "proc filesystem root");
  prof_cmd->add_option("--input-bytes", prof_input, "app feature: input size");
  prof_cmd->add_option("--flop-count", prof_flops, "app feature: operation count");
  prof_cmd->add_option("--io-bytes", prof_io_bytes, "app feature: bytes read+written");
  prof_cmd->add_option("--branching", prof_branching, "app feature: branches per 1k instructions");
  prof_cmd->add_option("--io-time-s", prof_io_s, "observed I/O time, if known");
  prof_cmd->add_option("--net-transfer-s", prof_net_s, "observed transfer time, if known");
  prof_cmd->add_option("command", prof_args, "command to run (after --)")->required();
  prof_cmd->callback([&] {
    pc::AppFeatures appf;
    appf.input_bytes = prof_input;
    appf.flop_count = prof_flops;
    appf.io_bytes = prof_io_bytes;
    appf.branching_factor = prof_branching;
    pc::ProfileOptions opts;
    opts.proc_root = prof_proc_root;
    if (!prof_sidecar.empty()) opts.sidecar = pc::load_sidecar(prof_sidecar);
    opts.io_time_s = prof_io_s;
    opts.net_transfer_s = prof_net_s;
    pc::TraceRepo repo(prof_repo);
    pc::ProfileRecord r =
        pc::profile_command(prof_args, appf, prof_class, prof_interval, repo, opts);
    std::printf("profiled '%s': exec_time_s=%s mem_peak_bytes=%s samples=%s\n",
                prof_args[0].c_str(), fmt_double(r.observed.exec_time_s).c_str(),
                fmt_double(r.observed.mem_peak_bytes).c_str(), r.meta.at("samples").c_str());
  });

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "fit agents from a repo");
  std::string train_repo, train_class, train_metric = "all", train_out, train_model = "forest";
  bool train_transfer = false, train_lenient = false;
  ForestFlags train_forest_flags;
  train_cmd->add_option("--repo", train_repo, "JSON-lines repo")
      ->envname("PREPCAST_REPO")
      ->required();
  train_cmd->add_option("--class", train_class, "resource class ('generic' pools every class)")
      ->required();
  train_cmd->add_option("--metric", train_metric, "metric to fit")
      ->check(CLI::IsMember({"exec_time", "mem_peak", "mem_avg", "io_time", "all"}));
  train_cmd->add_option("--model", train_model, "regressor family")
      ->check(CLI::IsMember({"forest", "linear"}));
  train_cmd->add_flag("--transfer", train_transfer, "fit the transfer-time agent instead");
  train_cmd->add_flag("--lenient", train_lenient, "skip corrupt repo lines");
  train_cmd->add_option("-o,--out", train_out, "model directory")->required();
  train_forest_flags.attach(train_cmd);
  train_cmd->callback([&] {
    pc::TraceRepo repo(train_repo);
    pc::AgentRegistry reg = load_or_empty(train_out);
    bool pooled = train_class == pc::AgentRegistry::kGenericClass;

    if (train_transfer) {
      auto records = repo.query_transfers(
          pooled ? std::optional<std::string>{} : std::optional<std::string>{train_class},
          train_lenient);
      pc::ForestModel m = pc::train_transfer_forest(records, train_forest_flags.params());
      reg.put_transfer(train_class, pc::Agent{std::move(m)});
      reg.save(train_out);
      std::printf("trained transfer/%s on %zu records -> %s\n", train_class.c_str(),
                  records.size(), train_out.c_str());
      return;
    }

    pc::RepoFilter filter;
    if (!pooled) filter.resource_class = train_class;
    auto records = repo.query(filter, train_lenient);
    std::vector<pc::MetricKind> metrics;
    if (train_metric == "all")
      metrics = {pc::MetricKind::ExecTime, pc::MetricKind::MemPeak, pc::MetricKind::MemAvg,
                 pc::MetricKind::IoTime};
    else
      metrics = {pc::metric_from_name(train_metric)};
    for (pc::MetricKind metric : metrics) {
      pc::Agent agent;
      if (train_model == "forest")
        agent.model = pc::train_forest(records, metric, train_forest_flags.params());
      else
        agent.model = pc::train_linear(records, metric);
      reg.put(train_class, metric, std::move(agent));
      std::printf("trained %s/%s on %zu records\n", train_class.c_str(),
                  pc::metric_name(metric).c_str(), records.size());
    }
    reg.save(train_out);
    std::printf("models -> %s\n", train_out.c_str());
  });

  // ---- predict ----
  auto* pred_cmd = app.add_subcommand("predict", "compose a plan into a temporal graph");
  std::string pred_prep, pred_models, pred_out, pred_wf;
  pred_cmd->add_option("--prep", pred_prep, "plan JSON")->required();
  pred_cmd->add_option("--models", pred_models, "model directory")->required();
  pred_cmd->add_option("--workflow", pred_wf, "nested workflow JSON (hierarchical composition)");
  pred_cmd->add_option("-o,--out", pred_out, "output prediction JSON")->required();
  pred_cmd->callback([&] {
    pc::Prep p = pc::parse_prep(pc::read_text_file(pred_prep));
    pc::AgentRegistry reg = pc::AgentRegistry::load(pred_models);
    pc::Ptg ptg = pred_wf.empty()
                      ? pc::compose(p, reg)
                      : pc::compose_nested(pc::parse_workflow(pc::read_text_file(pred_wf)), p, reg);
    pc::write_text_file(pred_out, pc::ptg_to_json(ptg).dump(2) + "\n");
    std::printf("makespan_s: %s\n", fmt_double(ptg.makespan_s).c_str());
    std::string path;
    for (const std::string& id : ptg.critical_path) {
      if (!path.empty()) path += " -> ";
      path += id;
    }
    std::printf("critical_path: %s\n", path.c_str());
    if (ptg.any_fallback) std::printf("note: generic-model fallback was used\n");
  });

  // ---- compare ----
  auto* cmp_cmd = app.add_subcommand("compare", "rank the placements of an open plan");
  std::string cmp_prep, cmp_models, cmp_out;
  std::size_t cmp_cap = pc::kAlternativeCap;
  cmp_cmd->add_option("--prep", cmp_prep, "plan JSON with alternative groups")->required();
  cmp_cmd->add_option("--models", cmp_models, "model directory")->required();
  cmp_cmd->add_option("--cap", cmp_cap, "alternative explosion cap");
  cmp_cmd->add_option("-o,--out", cmp_out, "optional ranked-list JSON");
  cmp_cmd->callback([&] {
    pc::Prep p = pc::parse_prep(pc::read_text_file(cmp_prep));
    pc::AgentRegistry reg = pc::AgentRegistry::load(cmp_models);
    auto ranked = pc::compare_alternatives(p, reg, cmp_cap);
    pc::json out = pc::json::array();
    std::vector<std::string> lines;
    lines.reserve(ranked.size());
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& r = ranked[i];
      std::string assign;
      pc::json jassign = pc::json::object();
      for (const pc::PrepStep& s : r.prep.steps) {
        if (!assign.empty()) assign += " ";
        assign += s.task_id + "=" + s.node_id;
        jassign[s.task_id] = s.node_id;
      }
      lines.push_back("#" + std::to_string(i + 1) + " makespan_s=" +
                      fmt_double(r.ptg.makespan_s) + " total_transfer_s=" +
                      fmt_double(r.ptg.total_transfer_s) + " " + assign);
      out.push_back(pc::json{{"rank", i + 1},
                             {"makespan_s", r.ptg.makespan_s},
                             {"total_transfer_s", r.ptg.total_transfer_s},
                             {"assignment", std::move(jassign)}});
    }
    // the artifact lands before stdout streaming so `prepcast compare | head`
    // cannot SIGPIPE the file away
    if (!cmp_out.empty())
      pc::write_text_file(cmp_out, pc::json{{"v", 1}, {"ranked", std::move(out)}}.dump(2) + "\n");
    for (const std::string& line : lines) std::printf("%s\n", line.c_str());
  });

  // ---- evaluate ----
  auto* eval_cmd = app.add_subcommand("evaluate", "held-out accuracy of agents on a repo");
  std::string eval_repo, eval_cross, eval_out;
  double eval_ratio = 0.25;
  std::uint64_t eval_seed = 0;
  bool eval_force_generic = false, eval_no_linear = false, eval_lenient = false;
  ForestFlags eval_forest_flags;
  eval_cmd->add_option("--repo", eval_repo, "JSON-lines repo (training side)")
      ->envname("PREPCAST_REPO")
      ->required();
  eval_cmd->add_option("--cross-repo", eval_cross, "second repo: train on --repo, test on this");
  eval_cmd->add_option("--test-ratio", eval_ratio, "held-out fraction");
  eval_cmd->add_option("--seed", eval_seed, "split seed");
  eval_cmd->add_flag("--force-generic", eval_force_generic, "score the pooled model only");
  eval_cmd->add_flag("--no-linear", eval_no_linear, "skip the linear baseline");
  eval_cmd->add_flag("--lenient", eval_lenient, "skip corrupt repo lines");
  eval_cmd->add_option("-o,--out", eval_out, "report JSON path");
  eval_forest_flags.attach(eval_cmd, "--forest-seed");
  eval_cmd->callback([&] {
    pc::TraceRepo repo(eval_repo);
    pc::EvalOptions opts;
    opts.forest = eval_forest_flags.params();
    opts.include_linear = !eval_no_linear;
    opts.force_generic = eval_force_generic;
    pc::EvalReport report;
    if (eval_cross.empty()) {
      report = pc::evaluate(repo.query({}, eval_lenient), {eval_ratio, eval_seed}, opts);
    } else {
      pc::TraceRepo cross(eval_cross);
      report = pc::eval_cross_workflow(repo.query({}, eval_lenient),
                                       cross.query({}, eval_lenient), opts);
      report.seed = eval_seed;
    }
    print_report_text(report);
    if (!eval_out.empty())
      pc::write_text_file(eval_out, pc::eval_report_to_json(report).dump(2) + "\n");
  });

  // ---- report ----
  auto* rep_cmd = app.add_subcommand("report", "render an evaluation report");
  std::string rep_in, rep_csv;
  rep_cmd->add_option("--in", rep_in, "report JSON from evaluate")->required();
  rep_cmd->add_option("--csv", rep_csv, "write plot-ready CSV series here");
  rep_cmd->callback([&] {
    pc::EvalReport report = pc::eval_report_from_json(pc::load_json_file(rep_in));
    print_report_text(report);
    if (!rep_csv.empty()) pc::write_text_file(rep_csv, pc::eval_report_to_csv(report));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const pc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
