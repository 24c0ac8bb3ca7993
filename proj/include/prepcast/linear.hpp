#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/features.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/record.hpp"

namespace prepcast {

// Least-squares baseline the forests are judged against.
struct LinearModel {
  std::vector<double> coef;
  double intercept = 0.0;
  std::size_t n_train = 0;

  double predict(const std::vector<double>& x) const {
    if (coef.empty()) throw NoModelError("linear model is untrained");
    if (x.size() != coef.size())
      throw ConfigError("linear model expects " + std::to_string(coef.size()) +
                        "-dim rows, got " + std::to_string(x.size()));
    double y = intercept;
    for (std::size_t i = 0; i < coef.size(); ++i) y += coef[i] * x[i];
    return y;
  }

  bool operator==(const LinearModel&) const = default;
};

// Tiny ridge term keeps the normal equations solvable when columns are
// collinear (constant features are common in single-class datasets).
inline constexpr double kRidgeLambda = 1e-8;

namespace detail {

// Cholesky solve of A w = b for symmetric positive definite A (dense, d^2).
inline std::vector<double> spd_solve(std::vector<double> a, std::vector<double> b, std::size_t d) {
  for (std::size_t j = 0; j < d; ++j) {
    double diag = a[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * d + k] * a[j * d + k];
    if (!(diag > 0.0)) throw ConfigError("linear solve: matrix not positive definite");
    diag = std::sqrt(diag);
    a[j * d + j] = diag;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = a[i * d + j];
      for (std::size_t k = 0; k < j; ++k) v -= a[i * d + k] * a[j * d + k];
      a[i * d + j] = v / diag;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * d + k] * b[k];
    b[i] = v / a[i * d + i];
  }
  for (std::size_t i = d; i-- > 0;) {
    double v = b[i];
    for (std::size_t k = i + 1; k < d; ++k) v -= a[k * d + i] * b[k];
    b[i] = v / a[i * d + i];
  }
  return b;
}

}  // namespace detail

inline LinearModel train_linear_rows(const std::vector<std::vector<double>>& rows,
                                     const std::vector<double>& targets) {
  if (rows.empty()) throw EmptyDatasetError("train_linear: no rows");
  if (rows.size() != targets.size()) throw ConfigError("train_linear: rows/targets size mismatch");
  const std::size_t n = rows.size();
  const std::size_t d = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != d) throw ConfigError("train_linear: inconsistent row dimensions");
  if (n < d + 1)
    throw InsufficientDataError("train_linear: need at least " + std::to_string(d + 1) +
                                " rows for " + std::to_string(d) + " features, got " +
                                std::to_string(n));

  // center and max-abs scale each column; the intercept absorbs the means
  // and stays unpenalized
  std::vector<double> mean(d, 0.0), scale(d, 1.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  for (std::size_t j = 0; j < d; ++j) mean[j] /= double(n);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) scale[j] = std::max(scale[j], std::abs(r[j] - mean[j]));

  double ymean = 0.0;
  for (double y : targets) ymean += y;
  ymean /= double(n);

  std::vector<double> xtx(d * d, 0.0), xty(d, 0.0), z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) z[j] = (rows[i][j] - mean[j]) / scale[j];
    double yc = targets[i] - ymean;
    for (std::size_t j = 0; j < d; ++j) {
      xty[j] += z[j] * yc;
      for (std::size_t k = j; k < d; ++k) xtx[j * d + k] += z[j] * z[k];
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    xtx[j * d + j] += kRidgeLambda * double(n);
    for (std::size_t k = j + 1; k < d; ++k) xtx[k * d + j] = xtx[j * d + k];
  }

  std::vector<double> w = detail::spd_solve(std::move(xtx), std::move(xty), d);

  LinearModel m;
  m.n_train = n;
  m.coef.resize(d);
  m.intercept = ymean;
  for (std::size_t j = 0; j < d; ++j) {
    m.coef[j] = w[j] / scale[j];
    m.intercept -= m.coef[j] * mean[j];
  }
  return m;
}

inline LinearModel train_linear(const std::vector<ProfileRecord>& records, MetricKind metric) {
  if (records.empty()) throw EmptyDatasetError("train_linear: no records");
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  rows.reserve(records.size());
  targets.reserve(records.size());
  for (const auto& r : records) {
    FeatureRow x = featurize(r);
    rows.emplace_back(x.begin(), x.end());
    targets.push_back(r.observed.get(metric));
  }
  return train_linear_rows(rows, targets);
}

inline json linear_to_json(const LinearModel& m) {
  return json{{"v", 1},
              {"kind", "linear"},
              {"dim", m.coef.size()},
              {"n_train", m.n_train},
              {"coef", m.coef},
              {"intercept", m.intercept}};
}

inline LinearModel linear_from_json(const json& j) {
  if (!j.is_object() || !j.contains("v") || !j.at("v").is_number_integer())
    throw CorruptModelError("linear model: missing version");
  if (j.at("v").get<int>() != 1)
    throw VersionError("linear model: unsupported version " + j.at("v").dump());
  LinearModel m;
  try {
    if (j.at("kind").get<std::string>() != "linear")
      throw CorruptModelError("linear model: kind mismatch");
    m.n_train = j.at("n_train").get<std::size_t>();
    m.coef = j.at("coef").get<std::vector<double>>();
    m.intercept = j.at("intercept").get<double>();
    if (m.coef.size() != j.at("dim").get<std::size_t>())
      throw CorruptModelError("linear model: dim/coef mismatch");
    if (m.coef.empty()) throw CorruptModelError("linear model: no coefficients");
  } catch (const json::exception& e) {
    throw CorruptModelError(std::string("linear model: malformed (") + e.what() + ")");
  }
  return m;
}

}  // namespace prepcast
