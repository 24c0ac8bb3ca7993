#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace prepcast;
using Catch::Approx;

namespace {

ForestParams exact_params() { return testutil::memo_params(); }

std::vector<std::vector<double>> column(std::initializer_list<double> xs) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x});
  return rows;
}

}  // namespace

TEST_CASE("a single split lands on the variance-minimizing midpoint") {
  // two clusters around x=1.5 and x=3.5; the only zero-SSE split is at 2.5
  std::vector<std::vector<double>> rows = column({1.0, 2.0, 3.0, 4.0});
  std::vector<double> y = {0.0, 0.0, 10.0, 10.0};

  SplitMix64 rng(1);
  RegressionTree t = train_tree(rows, y, exact_params(), rng);
  REQUIRE(t.nodes[0].feature == 0);
  REQUIRE(t.nodes[0].threshold == 2.5);
  REQUIRE(t.predict({1.9}) == 0.0);
  REQUIRE(t.predict({2.4999}) == 0.0);
  REQUIRE(t.predict({2.5}) == 10.0);  // rule is x < threshold goes left
  REQUIRE(t.predict({100.0}) == 10.0);
}

TEST_CASE("split ties resolve to the lowest feature index") {
  // both columns are identical, so their best splits score the same
  std::vector<std::vector<double>> rows = {{1, 1}, {2, 2}, {3, 3}, {4, 4}};
  std::vector<double> y = {0.0, 0.0, 10.0, 10.0};
  ForestParams p = exact_params();
  p.feature_subsample = 2;

  SplitMix64 rng(1);
  RegressionTree t = train_tree(rows, y, p, rng);
  REQUIRE(t.nodes[0].feature == 0);
}

TEST_CASE("constant targets produce one exact leaf") {
  std::vector<std::vector<double>> rows = column({1, 2, 3, 4, 5});
  std::vector<double> y(5, 5.5);
  SplitMix64 rng(9);
  RegressionTree t = train_tree(rows, y, exact_params(), rng);
  REQUIRE(t.nodes.size() == 1);
  REQUIRE(t.nodes[0].feature == -1);
  REQUIRE(t.nodes[0].value == 5.5);
  REQUIRE(t.predict({-1e18}) == 5.5);
}

TEST_CASE("min_leaf and max_depth stop growth") {
  std::vector<std::vector<double>> rows = column({1, 2, 3, 4});
  std::vector<double> y = {1.0, 2.0, 3.0, 4.0};

  SECTION("min_leaf larger than half the rows forces a mean leaf") {
    ForestParams p = exact_params();
    p.min_leaf = 3;
    SplitMix64 rng(1);
    RegressionTree t = train_tree(rows, y, p, rng);
    REQUIRE(t.nodes.size() == 1);
    REQUIRE(t.nodes[0].value == 2.5);
  }
  SECTION("max_depth 1 allows exactly one split") {
    ForestParams p = exact_params();
    p.max_depth = 1;
    SplitMix64 rng(1);
    RegressionTree t = train_tree(rows, y, p, rng);
    REQUIRE(t.nodes[0].feature == 0);
    int l = t.nodes[0].left, r = t.nodes[0].right;
    REQUIRE(t.nodes[std::size_t(l)].feature == -1);
    REQUIRE(t.nodes[std::size_t(r)].feature == -1);
  }
}

TEST_CASE("an exact-recall forest memorizes distinct rows") {
  SplitMix64 g(77);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 50; ++i) {
    FeatureRow x = featurize(testutil::make_app(std::uint64_t(i)), testutil::make_static(),
                             DynFeatures{});
    rows.emplace_back(x.begin(), x.end());
    y.push_back(g.uniform(0.5, 100.0));
  }
  ForestModel m = train_forest_rows(rows, y, exact_params());
  for (std::size_t i = 0; i < rows.size(); ++i) REQUIRE(m.predict(rows[i]) == y[i]);
}

TEST_CASE("forest predictions never leave the training target envelope") {
  SplitMix64 g(123);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    int n = 10 + int(g.next_below(30));
    for (int i = 0; i < n; ++i) {
      rows.push_back({g.uniform(-5, 5), g.uniform(-5, 5), g.uniform(-5, 5)});
      y.push_back(g.uniform(-50, 50));
    }
    ForestParams p;
    p.n_trees = 10;
    p.seed = std::uint64_t(trial);
    ForestModel m = train_forest_rows(rows, y, p);
    double lo = *std::min_element(y.begin(), y.end());
    double hi = *std::max_element(y.begin(), y.end());
    for (int q = 0; q < 20; ++q) {
      double v = m.predict({g.uniform(-100, 100), g.uniform(-100, 100), g.uniform(-100, 100)});
      REQUIRE(v >= lo);
      REQUIRE(v <= hi);
    }
  }
}

TEST_CASE("forest training is deterministic in the seed") {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  SplitMix64 g(5);
  for (int i = 0; i < 40; ++i) {
    rows.push_back({g.uniform(0, 10), g.uniform(0, 10)});
    y.push_back(g.uniform(0, 1));
  }
  ForestParams p;
  p.n_trees = 8;
  p.seed = 99;
  REQUIRE(train_forest_rows(rows, y, p) == train_forest_rows(rows, y, p));
}

TEST_CASE("forest training guards its inputs") {
  ForestParams p;
  REQUIRE_THROWS_AS(train_forest_rows({}, {}, p), EmptyDatasetError);
  REQUIRE_THROWS_AS(train_forest_rows({{1.0}}, {1.0, 2.0}, p), ConfigError);
  ForestParams bad = p;
  bad.n_trees = 0;
  REQUIRE_THROWS_AS(train_forest_rows({{1.0}}, {1.0}, bad), ConfigError);
  bad = p;
  bad.min_leaf = 0;
  SplitMix64 rng(0);
  REQUIRE_THROWS_AS(train_tree({{1.0}}, {1.0}, bad, rng), ConfigError);

  // record-level floor of five
  OracleLaw law;
  law.classes["c"] = LawCoefficients{};
  std::vector<ProfileRecord> four = generate_dataset(law, "c", 4, FeatureRanges{});
  REQUIRE_THROWS_AS(train_forest(four, MetricKind::ExecTime, p), InsufficientDataError);
  REQUIRE_THROWS_AS(train_forest({}, MetricKind::ExecTime, p), EmptyDatasetError);

  // prediction dimension check
  std::vector<ProfileRecord> five = generate_dataset(law, "c", 5, FeatureRanges{});
  ForestModel m = train_forest(five, MetricKind::ExecTime, p);
  REQUIRE_THROWS_AS(m.predict({1.0, 2.0}), ConfigError);
  REQUIRE_THROWS_AS(ForestModel{}.predict(std::vector<double>(kFeatureDim, 0.0)), NoModelError);
}

TEST_CASE("forest models round-trip through JSON") {
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  SplitMix64 g(6);
  for (int i = 0; i < 30; ++i) {
    rows.push_back({g.uniform(0, 10), g.uniform(0, 10), g.uniform(0, 10)});
    y.push_back(g.uniform(0, 100));
  }
  ForestParams p;
  p.n_trees = 5;
  p.seed = 4;
  ForestModel m = train_forest_rows(rows, y, p);
  REQUIRE(forest_from_json(forest_to_json(m)) == m);
}

TEST_CASE("corrupt forest documents are refused") {
  std::vector<std::vector<double>> rows = column({1, 2, 3, 4, 5});
  std::vector<double> y = {1, 2, 3, 4, 5};
  json good = forest_to_json(train_forest_rows(rows, y, exact_params()));

  SECTION("wrong version") {
    json j = good;
    j["v"] = 2;
    REQUIRE_THROWS_AS(forest_from_json(j), VersionError);
  }
  SECTION("missing version") {
    json j = good;
    j.erase("v");
    REQUIRE_THROWS_AS(forest_from_json(j), CorruptModelError);
  }
  SECTION("kind mismatch") {
    json j = good;
    j["kind"] = "linear";
    REQUIRE_THROWS_AS(forest_from_json(j), CorruptModelError);
  }
  SECTION("ragged arrays") {
    json j = good;
    j["trees"][0]["value"].erase(0);
    REQUIRE_THROWS_AS(forest_from_json(j), CorruptModelError);
  }
  SECTION("child index out of range") {
    json j = good;
    j["trees"][0]["left"][0] = 999;
    REQUIRE_THROWS_AS(forest_from_json(j), CorruptModelError);
  }
  SECTION("no trees") {
    json j = good;
    j["trees"] = json::array();
    REQUIRE_THROWS_AS(forest_from_json(j), CorruptModelError);
  }
  SECTION("missing field") {
    json j = good;
    j.erase("target_min");
    REQUIRE_THROWS_AS(forest_from_json(j), CorruptModelError);
  }
}

TEST_CASE("linear regression recovers an exact linear law") {
  // y = 3 + 2 x0 - 0.5 x1 + 4 x2 over more rows than dimensions
  SplitMix64 g(12);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 40; ++i) {
    double a = g.uniform(-10, 10), b = g.uniform(0, 5), c = g.uniform(-1, 1);
    rows.push_back({a, b, c});
    y.push_back(3.0 + 2.0 * a - 0.5 * b + 4.0 * c);
  }
  LinearModel m = train_linear_rows(rows, y);
  REQUIRE(m.coef[0] == Approx(2.0).margin(1e-6));
  REQUIRE(m.coef[1] == Approx(-0.5).margin(1e-6));
  REQUIRE(m.coef[2] == Approx(4.0).margin(1e-6));
  REQUIRE(m.intercept == Approx(3.0).margin(1e-6));
  REQUIRE(m.predict({1.0, 1.0, 1.0}) == Approx(8.5).margin(1e-6));
}

TEST_CASE("ridge term survives collinear and constant columns") {
  // x1 duplicates x0 and x2 never moves; plain normal equations would be
  // singular
  SplitMix64 g(13);
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    double a = g.uniform(-10, 10);
    rows.push_back({a, a, 7.0});
    y.push_back(1.0 + 3.0 * a);
  }
  LinearModel m = train_linear_rows(rows, y);
  for (const auto& r : rows) {
    double expect = 1.0 + 3.0 * r[0];
    REQUIRE(m.predict(r) == Approx(expect).margin(1e-4));
  }
}

TEST_CASE("linear training demands more rows than features") {
  std::vector<std::vector<double>> rows(3, std::vector<double>{1.0, 2.0, 3.0});
  std::vector<double> y = {1, 2, 3};
  REQUIRE_THROWS_AS(train_linear_rows(rows, y), InsufficientDataError);
  REQUIRE_THROWS_AS(train_linear_rows({}, {}), EmptyDatasetError);

  // the record-level entry point needs kFeatureDim + 1 rows
  OracleLaw law;
  law.classes["c"] = LawCoefficients{};
  std::vector<ProfileRecord> few = generate_dataset(law, "c", int(kFeatureDim), FeatureRanges{});
  REQUIRE_THROWS_AS(train_linear(few, MetricKind::ExecTime), InsufficientDataError);
  std::vector<ProfileRecord> enough =
      generate_dataset(law, "c", int(kFeatureDim) + 1, FeatureRanges{});
  REQUIRE_NOTHROW(train_linear(enough, MetricKind::ExecTime));
}

TEST_CASE("linear models round-trip through JSON and refuse corruption") {
  LinearModel m;
  m.coef = {1.25, -2.5};
  m.intercept = 0.75;
  m.n_train = 10;
  REQUIRE(linear_from_json(linear_to_json(m)) == m);

  json good = linear_to_json(m);
  SECTION("wrong version") {
    json j = good;
    j["v"] = 3;
    REQUIRE_THROWS_AS(linear_from_json(j), VersionError);
  }
  SECTION("dim mismatch") {
    json j = good;
    j["dim"] = 5;
    REQUIRE_THROWS_AS(linear_from_json(j), CorruptModelError);
  }
  SECTION("kind mismatch") {
    json j = good;
    j["kind"] = "forest";
    REQUIRE_THROWS_AS(linear_from_json(j), CorruptModelError);
  }
}

TEST_CASE("registry dispatches to the class agent with generic fallback") {
  // constant agents: zero coefficients, the intercept is the prediction
  auto constant_agent = [](double value) {
    LinearModel m;
    m.coef.assign(kFeatureDim, 0.0);
    m.intercept = value;
    m.n_train = 1;
    return Agent{m};
  };

  AgentRegistry reg;
  reg.put("gordon", MetricKind::ExecTime, constant_agent(5.0));
  reg.put(AgentRegistry::kGenericClass, MetricKind::ExecTime, constant_agent(9.0));

  AppFeatures app = testutil::make_app(1);
  StaticFeatures st = testutil::make_static();
  DynFeatures dyn;

  Prediction exact = reg.predict("gordon", MetricKind::ExecTime, app, st, dyn);
  REQUIRE(exact.value == 5.0);
  REQUIRE_FALSE(exact.used_fallback);

  Prediction fb = reg.predict("unseen", MetricKind::ExecTime, app, st, dyn);
  REQUIRE(fb.value == 9.0);
  REQUIRE(fb.used_fallback);

  REQUIRE_THROWS_AS(reg.predict("gordon", MetricKind::MemPeak, app, st, dyn), NoModelError);

  SECTION("negative raw outputs clamp to zero") {
    reg.put("gordon", MetricKind::MemPeak, constant_agent(-3.0));
    Prediction clamped = reg.predict("gordon", MetricKind::MemPeak, app, st, dyn);
    REQUIRE(clamped.value == 0.0);
  }
}

TEST_CASE("transfer agents dispatch by receiving class") {
  auto constant_transfer = [](double value) {
    LinearModel m;
    m.coef.assign(kTransferFeatureDim, 0.0);
    m.intercept = value;
    m.n_train = 1;
    return Agent{m};
  };
  AgentRegistry reg;
  reg.put_transfer("gordon", constant_transfer(0.5));
  REQUIRE(reg.predict_transfer("gordon", 1000, 1e9, 1e-4, 1e9, 1e-4).value == 0.5);
  REQUIRE_THROWS_AS(reg.predict_transfer("unseen", 1000, 1e9, 1e-4, 1e9, 1e-4), NoModelError);
  reg.put_transfer(AgentRegistry::kGenericClass, constant_transfer(0.75));
  Prediction fb = reg.predict_transfer("unseen", 1000, 1e9, 1e-4, 1e9, 1e-4);
  REQUIRE(fb.value == 0.75);
  REQUIRE(fb.used_fallback);
}

TEST_CASE("registries save to and load from a model directory") {
  OracleLaw law;
  law.name = "persist";
  law.seed = 7;
  law.classes["gordon"] = LawCoefficients{0.9, 1.0, 0.7, 0.1, 64e6, 1.0};
  law.classes["bigmem"] = LawCoefficients{1.5, 1.0, 0.7, 0.1, 128e6, 2.0};
  ForestParams p;
  p.n_trees = 5;

  AgentRegistry reg;
  for (const char* klass : {"gordon", "bigmem"}) {
    std::vector<ProfileRecord> rs = generate_dataset(law, klass, 40, FeatureRanges{});
    for (MetricKind k : {MetricKind::ExecTime, MetricKind::MemPeak})
      reg.put(klass, k, Agent{train_forest(rs, k, p)});
  }
  reg.put_transfer("gordon",
                   Agent{train_transfer_forest(
                       generate_transfer_dataset(law, "gordon", 40, FeatureRanges{}), p)});

  testutil::TempDir tmp;
  std::string dir = tmp.file("models");
  reg.save(dir);

  REQUIRE(std::filesystem::exists(dir + "/gordon__exec_time.json"));
  REQUIRE(std::filesystem::exists(dir + "/bigmem__mem_peak.json"));
  REQUIRE(std::filesystem::exists(dir + "/transfer__gordon.json"));

  AgentRegistry back = AgentRegistry::load(dir);
  REQUIRE(back.size() == reg.size());
  AppFeatures app = testutil::make_app(3);
  StaticFeatures st = testutil::make_static();
  DynFeatures dyn;
  for (const char* klass : {"gordon", "bigmem"}) {
    REQUIRE(back.predict(klass, MetricKind::ExecTime, app, st, dyn).value ==
            reg.predict(klass, MetricKind::ExecTime, app, st, dyn).value);
  }
  REQUIRE(back.predict_transfer("gordon", 5'000'000, 1e9, 1e-4, 2e9, 2e-4).value ==
          reg.predict_transfer("gordon", 5'000'000, 1e9, 1e-4, 2e9, 2e-4).value);

  SECTION("stray files and versions are rejected") {
    write_text_file(dir + "/noseparator.json", "{}");
    REQUIRE_THROWS_AS(AgentRegistry::load(dir), CorruptModelError);
    std::filesystem::remove(dir + "/noseparator.json");

    json j = load_json_file(dir + "/gordon__exec_time.json");
    j["v"] = 2;
    write_text_file(dir + "/gordon__exec_time.json", j.dump());
    REQUIRE_THROWS_AS(AgentRegistry::load(dir), VersionError);
  }
  SECTION("loading a missing directory raises IoError") {
    REQUIRE_THROWS_AS(AgentRegistry::load(tmp.file("absent")), IoError);
  }
  SECTION("unsafe class names cannot be saved") {
    AgentRegistry bad;
    bad.put("two__underscores", MetricKind::ExecTime, Agent{LinearModel{{1.0}, 0.0, 1}});
    REQUIRE_THROWS_AS(bad.save(tmp.file("bad1")), ConfigError);
    AgentRegistry worse;
    worse.put("slash/name", MetricKind::ExecTime, Agent{LinearModel{{1.0}, 0.0, 1}});
    REQUIRE_THROWS_AS(worse.save(tmp.file("bad2")), ConfigError);
  }
}
