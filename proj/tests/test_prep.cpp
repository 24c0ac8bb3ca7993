#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace prepcast;
using testutil::make_app;
using testutil::make_cluster;

namespace {

WorkflowSpec diamond() {
  WorkflowSpec w;
  w.name = "diamond";
  for (const char* id : {"a", "b", "c", "d"})
    w.tasks.push_back({id, TaskKind::Atomic, make_app(0), {}});
  w.edges = {{"a", "b", 10}, {"a", "c", 20}, {"b", "d", 30}, {"c", "d", 40}};
  return w;
}

}  // namespace

TEST_CASE("round-robin planning assigns sorted nodes in topo order") {
  Prep p = plan(diamond(), make_cluster(2));
  REQUIRE(p.steps.size() == 4);
  REQUIRE(p.steps[0].task_id == "a");
  REQUIRE(p.steps[0].node_id == "n1");
  REQUIRE(p.steps[1].task_id == "b");
  REQUIRE(p.steps[1].node_id == "n2");
  REQUIRE(p.steps[2].task_id == "c");
  REQUIRE(p.steps[2].node_id == "n1");
  REQUIRE(p.steps[3].task_id == "d");
  REQUIRE(p.steps[3].node_id == "n2");
  REQUIRE(p.transfers.size() == 4);
  REQUIRE(p.alternatives.empty());
}

TEST_CASE("explicit planning uses the map and rejects gaps") {
  PlanOptions opts;
  opts.policy = PlanPolicy::Explicit;
  opts.explicit_map = {{"a", "n2"}, {"b", "n1"}, {"c", "n2"}, {"d", "n1"}};
  Prep p = plan(diamond(), make_cluster(2), opts);
  REQUIRE(p.steps[0].node_id == "n2");
  REQUIRE(p.steps[3].node_id == "n1");

  opts.explicit_map.erase("c");
  REQUIRE_THROWS_AS(plan(diamond(), make_cluster(2), opts), UncoveredTaskError);
}

TEST_CASE("all-candidates planning leaves alternative groups") {
  PlanOptions opts;
  opts.policy = PlanPolicy::AllCandidates;
  Prep p = plan(diamond(), make_cluster(3), opts);
  REQUIRE(p.alternatives.size() == 4);
  for (const PrepStep& s : p.steps) REQUIRE(s.node_id.empty());
  for (const AlternativeGroup& g : p.alternatives)
    REQUIRE(g.candidate_nodes == std::vector<std::string>{"n1", "n2", "n3"});
}

TEST_CASE("planning flattens nested workflows first") {
  WorkflowSpec body;
  body.name = "inner";
  body.tasks = {{"x", TaskKind::Atomic, make_app(1), {}}};

  WorkflowSpec w;
  w.name = "outer";
  TaskNode s;
  s.id = "s";
  s.kind = TaskKind::SubWorkflow;
  s.body.push_back(body);
  w.tasks.push_back(s);
  w.tasks.push_back({"a", TaskKind::Atomic, make_app(2), {}});
  w.edges = {{"a", "s", 5}};

  Prep p = plan(w, make_cluster(1));
  REQUIRE(p.steps.size() == 2);
  REQUIRE(p.steps[0].task_id == "a");
  REQUIRE(p.steps[1].task_id == "s/x");
  REQUIRE(p.transfers == std::vector<TransferEdge>{{"a", "s/x", 5}});
}

TEST_CASE("per-task dyn assumptions are carried onto steps") {
  PlanOptions opts;
  opts.dyn_map["b"].jobs_running = 4;
  Prep p = plan(diamond(), make_cluster(2), opts);
  REQUIRE(p.steps[1].task_id == "b");
  REQUIRE(p.steps[1].dyn.jobs_running == 4);
  REQUIRE(p.steps[0].dyn.jobs_running == 0);
}

TEST_CASE("resolve_alternatives enumerates the cartesian product in order") {
  Prep p = plan(diamond(), make_cluster(2));
  // open up two of the four placements
  p.steps[0].node_id.clear();
  p.steps[3].node_id.clear();
  p.alternatives = {{"d", {"n1", "n2"}}, {"a", {"n1", "n2"}}};  // unsorted on purpose

  std::vector<Prep> all = resolve_alternatives(p);
  REQUIRE(all.size() == 4);
  auto pick = [&](std::size_t i) {
    return std::pair{all[i].steps[0].node_id, all[i].steps[3].node_id};
  };
  // groups sorted by task id ("a" then "d"), last group varying fastest
  REQUIRE(pick(0) == std::pair<std::string, std::string>{"n1", "n1"});
  REQUIRE(pick(1) == std::pair<std::string, std::string>{"n1", "n2"});
  REQUIRE(pick(2) == std::pair<std::string, std::string>{"n2", "n1"});
  REQUIRE(pick(3) == std::pair<std::string, std::string>{"n2", "n2"});
  for (const Prep& q : all) {
    REQUIRE(q.alternatives.empty());
    REQUIRE_NOTHROW(validate_prep(q));
  }
}

TEST_CASE("resolve_alternatives passes through fully bound plans") {
  Prep p = plan(diamond(), make_cluster(2));
  std::vector<Prep> all = resolve_alternatives(p);
  REQUIRE(all.size() == 1);
  REQUIRE(all[0] == p);
}

TEST_CASE("alternative explosion is capped") {
  REQUIRE(kAlternativeCap == 10000);

  // 5 open tasks x 10 candidates each = 100000 combinations
  WorkflowSpec w;
  w.name = "wide";
  for (int i = 0; i < 5; ++i)
    w.tasks.push_back({"t" + std::to_string(i), TaskKind::Atomic, make_app(std::uint64_t(i)), {}});
  PlanOptions opts;
  opts.policy = PlanPolicy::AllCandidates;
  Prep p = plan(w, make_cluster(10), opts);
  REQUIRE_THROWS_AS(resolve_alternatives(p), ExplosionError);

  // 4 x 10 = 10000 sits exactly at the cap and must succeed
  w.tasks.pop_back();
  Prep q = plan(w, make_cluster(10), opts);
  REQUIRE(resolve_alternatives(q).size() == 10000);
}

TEST_CASE("prep validation catches structural damage") {
  Prep good = plan(diamond(), make_cluster(2));

  SECTION("no nodes") {
    Prep p = good;
    p.nodes.clear();
    REQUIRE_THROWS_AS(validate_prep(p), ConfigError);
  }
  SECTION("step on unknown node") {
    Prep p = good;
    p.steps[0].node_id = "ghost";
    REQUIRE_THROWS_AS(validate_prep(p), UnknownNodeError);
  }
  SECTION("duplicate step ids") {
    Prep p = good;
    p.steps.push_back(p.steps[0]);
    REQUIRE_THROWS_AS(validate_prep(p), ParseError);
  }
  SECTION("unassigned step without an alternative group") {
    Prep p = good;
    p.steps[2].node_id.clear();
    REQUIRE_THROWS_AS(validate_prep(p), UncoveredTaskError);
  }
  SECTION("transfer to unknown task") {
    Prep p = good;
    p.transfers.push_back({"a", "ghost", 1});
    REQUIRE_THROWS_AS(validate_prep(p), DanglingEdgeError);
  }
  SECTION("transfer cycle") {
    Prep p = good;
    p.transfers.push_back({"d", "a", 1});
    REQUIRE_THROWS_AS(validate_prep(p), CycleError);
  }
  SECTION("alternative group for unknown task") {
    Prep p = good;
    p.alternatives.push_back({"ghost", {"n1"}});
    REQUIRE_THROWS_AS(validate_prep(p), ParseError);
  }
  SECTION("alternative group naming unknown node") {
    Prep p = good;
    p.steps[0].node_id.clear();
    p.alternatives.push_back({"a", {"n1", "ghost"}});
    REQUIRE_THROWS_AS(validate_prep(p), UnknownNodeError);
  }
  SECTION("empty candidate list") {
    Prep p = good;
    p.steps[0].node_id.clear();
    p.alternatives.push_back({"a", {}});
    REQUIRE_THROWS_AS(validate_prep(p), ParseError);
  }
  SECTION("duplicate cluster node ids") {
    Prep p = good;
    p.nodes.push_back(p.nodes[0]);
    REQUIRE_THROWS_AS(validate_prep(p), ParseError);
  }
}

TEST_CASE("plan documents round-trip exactly") {
  Prep p = plan(diamond(), make_cluster(2));
  REQUIRE(parse_prep(serialize_prep(p)) == p);

  PlanOptions opts;
  opts.policy = PlanPolicy::AllCandidates;
  Prep open = plan(diamond(), make_cluster(3), opts);
  REQUIRE(parse_prep(serialize_prep(open)) == open);

  REQUIRE_THROWS_AS(parse_prep("{\"v\":1}"), ParseError);
  REQUIRE_THROWS_AS(parse_prep("[]"), ParseError);
}

TEST_CASE("planning is deterministic") {
  std::string once = serialize_prep(plan(diamond(), make_cluster(3)));
  std::string twice = serialize_prep(plan(diamond(), make_cluster(3)));
  REQUIRE(once == twice);
}

TEST_CASE("prep_node looks up cluster nodes") {
  Prep p = plan(diamond(), make_cluster(2));
  REQUIRE(prep_node(p, "n2").id == "n2");
  REQUIRE_THROWS_AS(prep_node(p, "nope"), UnknownNodeError);
}
