#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "prepcast/errors.hpp"
#include "prepcast/features.hpp"
#include "prepcast/forest.hpp"
#include "prepcast/json_util.hpp"
#include "prepcast/linear.hpp"

namespace prepcast {

// One trained model, forest or linear, behind a common predict.
struct Agent {
  std::variant<ForestModel, LinearModel> model;

  double predict(const std::vector<double>& x) const {
    return std::visit([&](const auto& m) { return m.predict(x); }, model);
  }

  std::size_t n_train() const {
    return std::visit([](const auto& m) { return m.n_train; }, model);
  }
};

inline json agent_to_json(const Agent& a) {
  if (std::holds_alternative<ForestModel>(a.model))
    return forest_to_json(std::get<ForestModel>(a.model));
  return linear_to_json(std::get<LinearModel>(a.model));
}

inline Agent agent_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind"))
    throw CorruptModelError("agent: missing kind");
  std::string kind = j.at("kind").is_string() ? j.at("kind").get<std::string>() : "";
  if (kind == "forest") return Agent{forest_from_json(j)};
  if (kind == "linear") return Agent{linear_from_json(j)};
  throw CorruptModelError("agent: unknown kind '" + kind + "'");
}

struct Prediction {
  double value = 0.0;
  bool used_fallback = false;
};

// Per-resource-class, per-metric model store. Lookups that miss the exact
// class fall back to the pooled "generic" class and say so, mirroring how a
// scheduler would handle hardware it has never profiled.
class AgentRegistry {
 public:
  static constexpr const char* kGenericClass = "generic";

  void put(const std::string& resource_class, MetricKind metric, Agent agent) {
    agents_[{resource_class, metric}] = std::move(agent);
  }

  void put_transfer(const std::string& to_class, Agent agent) {
    transfer_agents_[to_class] = std::move(agent);
  }

  bool has(const std::string& resource_class, MetricKind metric) const {
    return agents_.count({resource_class, metric}) > 0;
  }

  bool has_transfer(const std::string& to_class) const {
    return transfer_agents_.count(to_class) > 0;
  }

  std::size_t size() const { return agents_.size() + transfer_agents_.size(); }

  std::vector<std::pair<std::string, MetricKind>> keys() const {
    std::vector<std::pair<std::string, MetricKind>> out;
    for (const auto& [k, a] : agents_) out.push_back(k);
    return out;
  }

  Prediction predict(const std::string& resource_class, MetricKind metric,
                     const AppFeatures& app, const StaticFeatures& st,
                     const DynFeatures& dyn) const {
    bool fallback = false;
    auto it = agents_.find({resource_class, metric});
    if (it == agents_.end()) {
      it = agents_.find({kGenericClass, metric});
      fallback = true;
    }
    if (it == agents_.end())
      throw NoModelError("no agent for class '" + resource_class + "', metric '" +
                         metric_name(metric) + "' (and no generic fallback)");
    FeatureRow x = featurize(app, st, dyn);
    double v = it->second.predict(std::vector<double>(x.begin(), x.end()));
    return Prediction{std::max(0.0, v), fallback};
  }

  Prediction predict_transfer(const std::string& to_class, std::uint64_t payload_bytes,
                              double from_bw, double from_lat, double to_bw,
                              double to_lat) const {
    bool fallback = false;
    auto it = transfer_agents_.find(to_class);
    if (it == transfer_agents_.end()) {
      it = transfer_agents_.find(kGenericClass);
      fallback = true;
    }
    if (it == transfer_agents_.end())
      throw NoModelError("no transfer agent for class '" + to_class +
                         "' (and no generic fallback)");
    TransferRow x = transfer_featurize(payload_bytes, from_bw, from_lat, to_bw, to_lat);
    double v = it->second.predict(std::vector<double>(x.begin(), x.end()));
    return Prediction{std::max(0.0, v), fallback};
  }

  // directory layout: <class>__<metric>.json and transfer__<class>.json
  void save(const std::string& dir) const {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create model directory '" + dir + "': " + ec.message());
    for (const auto& [key, agent] : agents_) {
      check_name(key.first);
      std::string path = dir + "/" + key.first + "__" + metric_name(key.second) + ".json";
      write_text_file(path, agent_to_json(agent).dump(2) + "\n");
    }
    for (const auto& [klass, agent] : transfer_agents_) {
      check_name(klass);
      write_text_file(dir + "/transfer__" + klass + ".json", agent_to_json(agent).dump(2) + "\n");
    }
  }

  static AgentRegistry load(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw IoError("model directory '" + dir + "' does not exist");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    AgentRegistry reg;
    for (const auto& path : files) {
      std::string stem = path.stem().string();
      auto sep = stem.find("__");
      if (sep == std::string::npos)
        throw CorruptModelError("model file '" + path.string() +
                                "': name is not <class>__<metric>.json");
      std::string head = stem.substr(0, sep);
      std::string tail = stem.substr(sep + 2);
      Agent agent = agent_from_json(load_json_file(path.string()));
      if (head == "transfer")
        reg.put_transfer(tail, std::move(agent));
      else
        reg.put(head, metric_from_name(tail), std::move(agent));
    }
    return reg;
  }

 private:
  static void check_name(const std::string& name) {
    if (name.empty()) throw ConfigError("resource class name is empty");
    if (name.find("__") != std::string::npos)
      throw ConfigError("resource class '" + name + "' may not contain '__' (filename separator)");
    for (char ch : name)
      if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'))
        throw ConfigError("resource class '" + name + "' has characters unsafe for filenames");
  }

  std::map<std::pair<std::string, MetricKind>, Agent> agents_;
  std::map<std::string, Agent> transfer_agents_;
};

}  // namespace prepcast
