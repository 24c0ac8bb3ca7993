#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/forest.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/linear.hpp"
#include "prepcast/prng.hpp"
#include "prepcast/record.hpp"
#include "prepcast/registry.hpp"

namespace prepcast {

// Targets below this are excluded from MAPE (the ratio is meaningless at 0);
// exclusions are counted in the report instead of silently dropped.
inline constexpr double kMapeEpsilon = 1e-9;
inline constexpr std::size_t kMinEvalRecordsPerClass = 20;

struct SplitSpec {
  double test_ratio = 0.25;
  std::uint64_t seed = 0;
};

struct EvalOptions {
  ForestParams forest;
  bool include_linear = true;
  // route every prediction through the pooled model, to quantify what
  // specialization buys
  bool force_generic = false;
};

struct EvalCell {
  std::string resource_class;
  MetricKind metric = MetricKind::ExecTime;
  std::string model;  // "forest" or "linear"
  double mape_pct = 0.0;
  double rmse = 0.0;
  std::size_t n_test = 0;
  std::size_t n_excluded = 0;
  double fallback_rate = 0.0;

  bool operator==(const EvalCell&) const = default;
};

struct EvalReport {
  std::vector<EvalCell> cells;
  std::uint64_t seed = 0;
  double test_ratio = 0.0;
  bool law_mismatch = false;

  const EvalCell& cell(const std::string& klass, MetricKind metric,
                       const std::string& model) const {
    for (const EvalCell& c : cells)
      if (c.resource_class == klass && c.metric == metric && c.model == model) return c;
    throw ConfigError("no eval cell for (" + klass + ", " + metric_name(metric) + ", " + model +
                      ")");
  }
};

// step metrics only; transfer agents are evaluated through composition
inline constexpr MetricKind kEvalMetrics[] = {MetricKind::ExecTime, MetricKind::MemPeak,
                                              MetricKind::MemAvg, MetricKind::IoTime};

namespace detail {

struct ErrorAccum {
  double abs_pct_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t n = 0;
  std::size_t n_excluded = 0;
  std::size_t n_fallback = 0;

  void add(double pred, double truth, bool fallback) {
    sq_sum += (pred - truth) * (pred - truth);
    ++n;
    if (fallback) ++n_fallback;
    if (std::abs(truth) < kMapeEpsilon)
      ++n_excluded;
    else
      abs_pct_sum += std::abs(pred - truth) / std::abs(truth);
  }

  EvalCell to_cell(const std::string& klass, MetricKind metric, const std::string& model) const {
    EvalCell c;
    c.resource_class = klass;
    c.metric = metric;
    c.model = model;
    c.n_test = n;
    c.n_excluded = n_excluded;
    std::size_t used = n - n_excluded;
    c.mape_pct = used ? 100.0 * abs_pct_sum / double(used) : 0.0;
    c.rmse = n ? std::sqrt(sq_sum / double(n)) : 0.0;
    c.fallback_rate = n ? double(n_fallback) / double(n) : 0.0;
    return c;
  }
};

// Fisher-Yates with a per-class substream so adding a class never reshuffles
// another class's split.
inline void split_class(std::size_t n, double test_ratio, std::uint64_t seed,
                        const std::string& klass, std::vector<std::size_t>& train,
                        std::vector<std::size_t>& test) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  SplitMix64 g(substream_seed(seed ^ fnv1a(klass), 0));
  for (std::size_t i = n; i-- > 1;) {
    std::size_t j = std::size_t(g.next_below(i + 1));
    std::swap(idx[i], idx[j]);
  }
  std::size_t n_test = std::size_t(test_ratio * double(n));
  test.assign(idx.begin(), idx.begin() + std::ptrdiff_t(n_test));
  train.assign(idx.begin() + std::ptrdiff_t(n_test), idx.end());
}

inline std::map<std::string, std::vector<ProfileRecord>> group_by_class(
    const std::vector<ProfileRecord>& records) {
  std::map<std::string, std::vector<ProfileRecord>> by_class;
  for (const ProfileRecord& r : records) by_class[r.resource_class].push_back(r);
  return by_class;
}

inline std::set<std::string> law_names(const std::vector<ProfileRecord>& records) {
  std::set<std::string> names;
  for (const ProfileRecord& r : records)
    if (auto it = r.meta.find("law"); it != r.meta.end()) names.insert(it->second);
  return names;
}

// Shared scoring stage: registry-backed forests plus optional per-class
// linear baselines, over a per-class test partition.
inline void score_cells(const std::map<std::string, std::vector<ProfileRecord>>& test_by_class,
                        const AgentRegistry& reg,
                        const std::map<std::pair<std::string, MetricKind>, LinearModel>& linears,
                        EvalReport& report) {
  for (const auto& [klass, test] : test_by_class) {
    for (MetricKind metric : kEvalMetrics) {
      ErrorAccum forest_acc;
      for (const ProfileRecord& r : test) {
        Prediction p = reg.predict(klass, metric, r.app, r.static_f, r.dyn);
        forest_acc.add(p.value, r.observed.get(metric), p.used_fallback);
      }
      report.cells.push_back(forest_acc.to_cell(klass, metric, "forest"));

      auto lin = linears.find({klass, metric});
      if (lin == linears.end()) continue;
      ErrorAccum linear_acc;
      for (const ProfileRecord& r : test) {
        FeatureRow x = featurize(r);
        double v = lin->second.predict(std::vector<double>(x.begin(), x.end()));
        linear_acc.add(std::max(0.0, v), r.observed.get(metric), false);
      }
      report.cells.push_back(linear_acc.to_cell(klass, metric, "linear"));
    }
  }
}

}  // namespace detail

// Held-out accuracy of the agents trained on this repository: shuffled
// deterministic split per class, forests (specialized + pooled generic) and
// a linear baseline where the training side is large enough for one.
inline EvalReport evaluate(const std::vector<ProfileRecord>& records, const SplitSpec& split,
                           const EvalOptions& opts = {}) {
  if (records.empty()) throw EmptyDatasetError("evaluate: no records");
  if (!(split.test_ratio > 0.0 && split.test_ratio < 1.0))
    throw InsufficientDataError("evaluate: test_ratio must be in (0, 1)");

  auto by_class = detail::group_by_class(records);

  AgentRegistry reg;
  std::map<std::pair<std::string, MetricKind>, LinearModel> linears;
  std::map<std::string, std::vector<ProfileRecord>> test_by_class;
  std::vector<ProfileRecord> pooled_train;

  for (const auto& [klass, rs] : by_class) {
    if (rs.size() < kMinEvalRecordsPerClass)
      throw InsufficientDataError("evaluate: class '" + klass + "' has " +
                                  std::to_string(rs.size()) + " records, need " +
                                  std::to_string(kMinEvalRecordsPerClass));
    std::vector<std::size_t> train_idx, test_idx;
    detail::split_class(rs.size(), split.test_ratio, split.seed, klass, train_idx, test_idx);
    if (test_idx.empty() || train_idx.empty())
      throw InsufficientDataError("evaluate: split leaves an empty partition for '" + klass + "'");

    std::vector<ProfileRecord> train;
    train.reserve(train_idx.size());
    for (std::size_t i : train_idx) train.push_back(rs[i]);
    for (std::size_t i : test_idx) test_by_class[klass].push_back(rs[i]);
    pooled_train.insert(pooled_train.end(), train.begin(), train.end());

    for (MetricKind metric : kEvalMetrics) {
      if (!opts.force_generic) reg.put(klass, metric, Agent{train_forest(train, metric, opts.forest)});
      if (opts.include_linear && train.size() >= kFeatureDim + 1)
        linears[{klass, metric}] = train_linear(train, metric);
    }
  }
  for (MetricKind metric : kEvalMetrics)
    reg.put(AgentRegistry::kGenericClass, metric, Agent{train_forest(pooled_train, metric, opts.forest)});

  EvalReport report;
  report.seed = split.seed;
  report.test_ratio = split.test_ratio;
  detail::score_cells(test_by_class, reg, linears, report);
  return report;
}

// Trains on repository A, tests on repository B: the cross-workflow transfer
// question. Classes B knows but A does not fall back to A's pooled model.
inline EvalReport eval_cross_workflow(const std::vector<ProfileRecord>& train_records,
                                      const std::vector<ProfileRecord>& test_records,
                                      const EvalOptions& opts = {}) {
  if (train_records.empty()) throw EmptyDatasetError("eval_cross_workflow: no training records");
  if (test_records.empty()) throw EmptyDatasetError("eval_cross_workflow: no test records");

  AgentRegistry reg;
  std::map<std::pair<std::string, MetricKind>, LinearModel> linears;
  for (const auto& [klass, rs] : detail::group_by_class(train_records)) {
    for (MetricKind metric : kEvalMetrics) {
      if (!opts.force_generic) reg.put(klass, metric, Agent{train_forest(rs, metric, opts.forest)});
      if (opts.include_linear && rs.size() >= kFeatureDim + 1)
        linears[{klass, metric}] = train_linear(rs, metric);
    }
  }
  for (MetricKind metric : kEvalMetrics)
    reg.put(AgentRegistry::kGenericClass, metric,
            Agent{train_forest(train_records, metric, opts.forest)});

  EvalReport report;
  std::set<std::string> laws_a = detail::law_names(train_records);
  std::set<std::string> laws_b = detail::law_names(test_records);
  report.law_mismatch = !laws_a.empty() && !laws_b.empty() && laws_a != laws_b;
  detail::score_cells(detail::group_by_class(test_records), reg, linears, report);
  return report;
}

// ---------------------------------------------------------------------------
// report documents: JSON for machines, CSV series for plotting

inline json eval_report_to_json(const EvalReport& r) {
  json cells = json::array();
  for (const EvalCell& c : r.cells)
    cells.push_back(json{{"resource_class", c.resource_class},
                         {"metric", metric_name(c.metric)},
                         {"model", c.model},
                         {"mape_pct", c.mape_pct},
                         {"rmse", c.rmse},
                         {"n_test", c.n_test},
                         {"n_excluded", c.n_excluded},
                         {"fallback_rate", c.fallback_rate}});
  return json{{"v", 1},
              {"seed", r.seed},
              {"test_ratio", r.test_ratio},
              {"law_mismatch", r.law_mismatch},
              {"cells", std::move(cells)}};
}

inline EvalReport eval_report_from_json(const json& j) {
  require_v1(j, "eval report");
  EvalReport r;
  try {
    r.seed = j.at("seed").get<std::uint64_t>();
    r.test_ratio = j.at("test_ratio").get<double>();
    r.law_mismatch = j.at("law_mismatch").get<bool>();
    for (const json& jc : j.at("cells")) {
      EvalCell c;
      c.resource_class = jc.at("resource_class").get<std::string>();
      c.metric = metric_from_name(jc.at("metric").get<std::string>());
      c.model = jc.at("model").get<std::string>();
      c.mape_pct = jc.at("mape_pct").get<double>();
      c.rmse = jc.at("rmse").get<double>();
      c.n_test = jc.at("n_test").get<std::size_t>();
      c.n_excluded = jc.at("n_excluded").get<std::size_t>();
      c.fallback_rate = jc.at("fallback_rate").get<double>();
      r.cells.push_back(std::move(c));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("eval report: malformed (") + e.what() + ")");
  }
  return r;
}

inline std::string eval_report_to_csv(const EvalReport& r) {
  std::string out = "resource_class,metric,model,mape_pct,rmse,n_test,n_excluded,fallback_rate\n";
  for (const EvalCell& c : r.cells) {
    json row = json::array(
        {c.mape_pct, c.rmse, c.n_test, c.n_excluded, c.fallback_rate});  // shortest round-trip
    out += c.resource_class + "," + metric_name(c.metric) + "," + c.model + "," +
           row[0].dump() + "," + row[1].dump() + "," + std::to_string(c.n_test) + "," +
           std::to_string(c.n_excluded) + "," + row[4].dump() + "\n";
  }
  return out;
}

}  // namespace prepcast
