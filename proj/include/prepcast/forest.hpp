#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/features.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/prng.hpp"
#include "prepcast/record.hpp"

namespace prepcast {

// Flat CART node. Interior nodes route x[feature] < threshold to the left
// child; leaves keep feature == -1 and carry the prediction.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const std::vector<double>& x) const {
    int at = 0;
    while (nodes[std::size_t(at)].feature >= 0) {
      const TreeNode& nd = nodes[std::size_t(at)];
      at = x[std::size_t(nd.feature)] < nd.threshold ? nd.left : nd.right;
    }
    return nodes[std::size_t(at)].value;
  }

  bool operator==(const RegressionTree&) const = default;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 12;
  int min_leaf = 2;
  int feature_subsample = 0;  // 0 picks ceil(dim / 3)
  std::uint64_t seed = 0;
  bool bootstrap = true;

  bool operator==(const ForestParams&) const = default;
};

struct ForestModel {
  std::vector<RegressionTree> trees;
  ForestParams params;
  std::size_t dim = 0;
  std::size_t n_train = 0;
  // training-target envelope; predictions never extrapolate past it
  double target_min = 0.0;
  double target_max = 0.0;

  double predict(const std::vector<double>& x) const {
    if (trees.empty()) throw NoModelError("forest has no trees");
    if (x.size() != dim)
      throw ConfigError("forest expects " + std::to_string(dim) + "-dim rows, got " +
                        std::to_string(x.size()));
    double sum = 0.0;
    for (const auto& t : trees) sum += t.predict(x);
    return std::clamp(sum / double(trees.size()), target_min, target_max);
  }

  bool operator==(const ForestModel&) const = default;
};

namespace detail {

inline int resolve_subsample(int requested, std::size_t dim) {
  if (requested > 0) return std::min<int>(requested, int(dim));
  return int((dim + 2) / 3);
}

// Welford accumulator; additions only, so prefix and suffix sums of squared
// deviations stay well conditioned even when targets share many digits.
struct Welford {
  double count = 0.0, mean = 0.0, m2 = 0.0;
  void add(double y) {
    count += 1.0;
    double d = y - mean;
    mean += d / count;
    m2 += d * (y - mean);
  }
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double child_sse = 0.0;
};

// Best (feature, midpoint threshold) over the candidate features, minimizing
// summed child SSE. Candidates are scanned in ascending feature order and
// thresholds in ascending value order with strictly-better acceptance, so
// ties resolve to the lowest feature index, then the lowest threshold.
inline SplitChoice best_split(const std::vector<std::vector<double>>& rows,
                              const std::vector<double>& targets, const std::vector<int>& idx,
                              const std::vector<int>& features, int min_leaf) {
  const std::size_t n = idx.size();
  SplitChoice best;
  bool have = false;

  std::vector<int> order(idx);
  std::vector<double> left_sse(n + 1), right_sse(n + 1);
  for (int f : features) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double va = rows[std::size_t(a)][std::size_t(f)];
      double vb = rows[std::size_t(b)][std::size_t(f)];
      return va != vb ? va < vb : a < b;
    });

    Welford fwd;
    left_sse[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      fwd.add(targets[std::size_t(order[i])]);
      left_sse[i + 1] = fwd.m2;
    }
    Welford bwd;
    right_sse[n] = 0.0;
    for (std::size_t i = n; i-- > 0;) {
      bwd.add(targets[std::size_t(order[i])]);
      right_sse[i] = bwd.m2;
    }

    for (std::size_t i = std::size_t(min_leaf); i + std::size_t(min_leaf) <= n; ++i) {
      double lo = rows[std::size_t(order[i - 1])][std::size_t(f)];
      double hi = rows[std::size_t(order[i])][std::size_t(f)];
      if (!(lo < hi)) continue;
      double thr = lo + (hi - lo) / 2.0;
      if (!(thr > lo)) thr = hi;  // adjacent floats: midpoint rounded down
      double sse = left_sse[i] + right_sse[i];
      if (!have || sse < best.child_sse) {
        best = SplitChoice{f, thr, sse};
        have = true;
      }
    }
  }
  return best;
}

inline double mean_of(const std::vector<double>& targets, const std::vector<int>& idx) {
  double sum = 0.0;
  for (int i : idx) sum += targets[std::size_t(i)];
  return sum / double(idx.size());
}

inline int grow_tree(RegressionTree& tree, const std::vector<std::vector<double>>& rows,
                     const std::vector<double>& targets, std::vector<int> idx, int depth,
                     const ForestParams& params, int subsample, std::size_t dim, SplitMix64& rng) {
  int me = int(tree.nodes.size());
  tree.nodes.emplace_back();

  double tmin = targets[std::size_t(idx[0])], tmax = tmin;
  for (int i : idx) {
    double y = targets[std::size_t(i)];
    tmin = std::min(tmin, y);
    tmax = std::max(tmax, y);
  }
  if (tmin == tmax) {
    tree.nodes[std::size_t(me)].value = tmin;  // constant target, exactly
    return me;
  }
  if (depth >= params.max_depth || idx.size() < 2 * std::size_t(params.min_leaf)) {
    tree.nodes[std::size_t(me)].value = mean_of(targets, idx);
    return me;
  }

  // partial Fisher-Yates draw of the per-split feature subset, then sorted
  // so the tie-break order does not depend on the draw order
  std::vector<int> pool(dim);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> features;
  features.reserve(std::size_t(subsample));
  for (int k = 0; k < subsample; ++k) {
    std::size_t j = std::size_t(k) + std::size_t(rng.next_below(std::uint64_t(dim) - std::uint64_t(k)));
    std::swap(pool[std::size_t(k)], pool[j]);
    features.push_back(pool[std::size_t(k)]);
  }
  std::sort(features.begin(), features.end());

  SplitChoice split = best_split(rows, targets, idx, features, params.min_leaf);
  if (split.feature < 0) {
    tree.nodes[std::size_t(me)].value = mean_of(targets, idx);
    return me;
  }

  std::vector<int> left_idx, right_idx;
  for (int i : idx)
    (rows[std::size_t(i)][std::size_t(split.feature)] < split.threshold ? left_idx : right_idx)
        .push_back(i);

  tree.nodes[std::size_t(me)].feature = split.feature;
  tree.nodes[std::size_t(me)].threshold = split.threshold;
  int l = grow_tree(tree, rows, targets, std::move(left_idx), depth + 1, params, subsample, dim, rng);
  int r = grow_tree(tree, rows, targets, std::move(right_idx), depth + 1, params, subsample, dim, rng);
  tree.nodes[std::size_t(me)].left = l;
  tree.nodes[std::size_t(me)].right = r;
  return me;
}

}  // namespace detail

inline RegressionTree train_tree(const std::vector<std::vector<double>>& rows,
                                 const std::vector<double>& targets, const ForestParams& params,
                                 SplitMix64& rng) {
  if (rows.empty()) throw EmptyDatasetError("train_tree: no rows");
  if (rows.size() != targets.size()) throw ConfigError("train_tree: rows/targets size mismatch");
  std::size_t dim = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != dim) throw ConfigError("train_tree: inconsistent row dimensions");
  if (params.max_depth < 1 || params.min_leaf < 1)
    throw ConfigError("train_tree: max_depth and min_leaf must be >= 1");

  int subsample = detail::resolve_subsample(params.feature_subsample, dim);
  std::vector<int> idx(rows.size());
  std::iota(idx.begin(), idx.end(), 0);
  RegressionTree tree;
  detail::grow_tree(tree, rows, targets, std::move(idx), 0, params, subsample, dim, rng);
  return tree;
}

inline ForestModel train_forest_rows(const std::vector<std::vector<double>>& rows,
                                     const std::vector<double>& targets,
                                     const ForestParams& params) {
  if (rows.empty()) throw EmptyDatasetError("train_forest: no rows");
  if (rows.size() != targets.size()) throw ConfigError("train_forest: rows/targets size mismatch");
  if (params.n_trees < 1) throw ConfigError("train_forest: n_trees must be >= 1");

  ForestModel model;
  model.params = params;
  model.dim = rows[0].size();
  model.n_train = rows.size();
  model.target_min = *std::min_element(targets.begin(), targets.end());
  model.target_max = *std::max_element(targets.begin(), targets.end());

  const std::size_t n = rows.size();
  for (int t = 0; t < params.n_trees; ++t) {
    SplitMix64 rng(substream_seed(params.seed, std::uint64_t(t)));
    if (params.bootstrap) {
      std::vector<std::vector<double>> boot_rows;
      std::vector<double> boot_targets;
      boot_rows.reserve(n);
      boot_targets.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::size_t pick = std::size_t(rng.next_below(n));
        boot_rows.push_back(rows[pick]);
        boot_targets.push_back(targets[pick]);
      }
      model.trees.push_back(train_tree(boot_rows, boot_targets, params, rng));
    } else {
      model.trees.push_back(train_tree(rows, targets, params, rng));
    }
  }
  return model;
}

inline constexpr std::size_t kMinTrainRecords = 5;

inline ForestModel train_forest(const std::vector<ProfileRecord>& records, MetricKind metric,
                                const ForestParams& params) {
  if (records.empty()) throw EmptyDatasetError("train_forest: no records");
  if (records.size() < kMinTrainRecords)
    throw InsufficientDataError("train_forest: need at least " +
                                std::to_string(kMinTrainRecords) + " records, got " +
                                std::to_string(records.size()));
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  rows.reserve(records.size());
  targets.reserve(records.size());
  for (const auto& r : records) {
    FeatureRow x = featurize(r);
    rows.emplace_back(x.begin(), x.end());
    targets.push_back(r.observed.get(metric));
  }
  return train_forest_rows(rows, targets, params);
}

inline ForestModel train_transfer_forest(const std::vector<TransferRecord>& records,
                                         const ForestParams& params) {
  if (records.empty()) throw EmptyDatasetError("train_transfer_forest: no records");
  if (records.size() < kMinTrainRecords)
    throw InsufficientDataError("train_transfer_forest: need at least " +
                                std::to_string(kMinTrainRecords) + " records, got " +
                                std::to_string(records.size()));
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  rows.reserve(records.size());
  targets.reserve(records.size());
  for (const auto& r : records) {
    TransferRow x = transfer_featurize(r);
    rows.emplace_back(x.begin(), x.end());
    targets.push_back(r.observed_s);
  }
  return train_forest_rows(rows, targets, params);
}

// ---------------------------------------------------------------------------
// model JSON, column-major per tree to keep files small

inline json forest_to_json(const ForestModel& m) {
  json trees = json::array();
  for (const auto& t : m.trees) {
    json f = json::array(), thr = json::array(), l = json::array(), r = json::array(),
         val = json::array();
    for (const auto& nd : t.nodes) {
      f.push_back(nd.feature);
      thr.push_back(nd.threshold);
      l.push_back(nd.left);
      r.push_back(nd.right);
      val.push_back(nd.value);
    }
    trees.push_back(json{{"feature", std::move(f)},
                         {"threshold", std::move(thr)},
                         {"left", std::move(l)},
                         {"right", std::move(r)},
                         {"value", std::move(val)}});
  }
  return json{{"v", 1},
              {"kind", "forest"},
              {"dim", m.dim},
              {"n_train", m.n_train},
              {"target_min", m.target_min},
              {"target_max", m.target_max},
              {"params",
               {{"n_trees", m.params.n_trees},
                {"max_depth", m.params.max_depth},
                {"min_leaf", m.params.min_leaf},
                {"feature_subsample", m.params.feature_subsample},
                {"seed", m.params.seed},
                {"bootstrap", m.params.bootstrap}}},
              {"trees", std::move(trees)}};
}

inline ForestModel forest_from_json(const json& j) {
  if (!j.is_object() || !j.contains("v") || !j.at("v").is_number_integer())
    throw CorruptModelError("forest model: missing version");
  if (j.at("v").get<int>() != 1)
    throw VersionError("forest model: unsupported version " + j.at("v").dump());
  ForestModel m;
  try {
    if (j.at("kind").get<std::string>() != "forest")
      throw CorruptModelError("forest model: kind mismatch");
    m.dim = j.at("dim").get<std::size_t>();
    m.n_train = j.at("n_train").get<std::size_t>();
    m.target_min = j.at("target_min").get<double>();
    m.target_max = j.at("target_max").get<double>();
    const json& p = j.at("params");
    m.params.n_trees = p.at("n_trees").get<int>();
    m.params.max_depth = p.at("max_depth").get<int>();
    m.params.min_leaf = p.at("min_leaf").get<int>();
    m.params.feature_subsample = p.at("feature_subsample").get<int>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.params.bootstrap = p.at("bootstrap").get<bool>();
    for (const json& jt : j.at("trees")) {
      const json& f = jt.at("feature");
      const json& thr = jt.at("threshold");
      const json& l = jt.at("left");
      const json& r = jt.at("right");
      const json& val = jt.at("value");
      std::size_t n = f.size();
      if (thr.size() != n || l.size() != n || r.size() != n || val.size() != n)
        throw CorruptModelError("forest model: ragged tree arrays");
      if (n == 0) throw CorruptModelError("forest model: empty tree");
      RegressionTree t;
      t.nodes.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        t.nodes[i].feature = f[i].get<int>();
        t.nodes[i].threshold = thr[i].get<double>();
        t.nodes[i].left = l[i].get<int>();
        t.nodes[i].right = r[i].get<int>();
        t.nodes[i].value = val[i].get<double>();
        if (t.nodes[i].feature >= 0) {
          bool lo = t.nodes[i].left < 0 || t.nodes[i].left >= int(n);
          bool ro = t.nodes[i].right < 0 || t.nodes[i].right >= int(n);
          if (lo || ro) throw CorruptModelError("forest model: child index out of range");
        }
      }
      m.trees.push_back(std::move(t));
    }
    if (m.trees.empty()) throw CorruptModelError("forest model: no trees");
  } catch (const json::exception& e) {
    throw CorruptModelError(std::string("forest model: malformed (") + e.what() + ")");
  }
  return m;
}

}  // namespace prepcast
