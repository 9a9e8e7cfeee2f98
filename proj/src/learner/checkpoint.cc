#include "ccil/learner/checkpoint.h"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ccil::nn {

using nlohmann::json;

json TensorToJson(const Tensor& t) {
  return json{{"shape", t.shape()}, {"values", t.values()}};
}

Tensor TensorFromJson(const json& j) {
  return Tensor(j.at("shape").get<std::vector<int>>(),
                j.at("values").get<std::vector<double>>());
}

Checkpoint Capture(const json& config, const ParameterStore& store,
                   const AdamState& optimizer, const Rng& rng) {
  Checkpoint c;
  c.config = config;
  for (const auto& [name, p] : store.entries()) {
    c.parameters.emplace_back(name, p->value);
  }
  c.optimizer = optimizer;
  c.rng = rng;
  return c;
}

void RestoreParameters(const Checkpoint& ckpt, ParameterStore& store) {
  const auto& entries = store.entries();
  if (entries.size() != ckpt.parameters.size()) {
    throw std::runtime_error("checkpoint has " +
                             std::to_string(ckpt.parameters.size()) +
                             " parameters, model expects " +
                             std::to_string(entries.size()));
  }
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, value] = ckpt.parameters[i];
    if (name != entries[i].first || !value.SameShape(entries[i].second->value)) {
      throw std::runtime_error("checkpoint parameter mismatch at " + name);
    }
  }
  for (size_t i = 0; i < entries.size(); ++i) {
    entries[i].second->value = ckpt.parameters[i].second;
  }
}

json CheckpointToJson(const Checkpoint& ckpt) {
  json params = json::array();
  for (const auto& [name, t] : ckpt.parameters) {
    json e = TensorToJson(t);
    e["name"] = name;
    params.push_back(std::move(e));
  }
  json m = json::array();
  json v = json::array();
  for (const auto& t : ckpt.optimizer.first_moment) m.push_back(TensorToJson(t));
  for (const auto& t : ckpt.optimizer.second_moment) v.push_back(TensorToJson(t));
  const AdamOptions& o = ckpt.optimizer.options;
  return json{
      {"format", "ccil-checkpoint-1"},
      {"config", ckpt.config},
      {"parameters", params},
      {"optimizer",
       {{"learning_rate", o.learning_rate},
        {"beta1", o.beta1},
        {"beta2", o.beta2},
        {"epsilon", o.epsilon},
        {"warmup_steps", o.warmup_steps},
        {"step_count", ckpt.optimizer.step_count},
        {"first_moment", m},
        {"second_moment", v}}},
      {"rng", {{"key", ckpt.rng.key()}, {"counter", ckpt.rng.counter()}}}};
}

Checkpoint CheckpointFromJson(const json& j) {
  if (j.value("format", "") != "ccil-checkpoint-1") {
    throw std::runtime_error("not a checkpoint document");
  }
  Checkpoint c;
  c.config = j.at("config");
  for (const auto& e : j.at("parameters")) {
    c.parameters.emplace_back(e.at("name").get<std::string>(), TensorFromJson(e));
  }
  const json& o = j.at("optimizer");
  c.optimizer.options.learning_rate = o.at("learning_rate").get<double>();
  c.optimizer.options.beta1 = o.at("beta1").get<double>();
  c.optimizer.options.beta2 = o.at("beta2").get<double>();
  c.optimizer.options.epsilon = o.at("epsilon").get<double>();
  c.optimizer.options.warmup_steps = o.at("warmup_steps").get<int64_t>();
  c.optimizer.step_count = o.at("step_count").get<int64_t>();
  for (const auto& t : o.at("first_moment")) {
    c.optimizer.first_moment.push_back(TensorFromJson(t));
  }
  for (const auto& t : o.at("second_moment")) {
    c.optimizer.second_moment.push_back(TensorFromJson(t));
  }
  c.rng = Rng::FromState(j.at("rng").at("key").get<uint64_t>(),
                         j.at("rng").at("counter").get<uint64_t>());
  return c;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << CheckpointToJson(ckpt).dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return CheckpointFromJson(json::parse(ss.str()));
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace ccil::nn
