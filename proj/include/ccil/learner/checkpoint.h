#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ccil/learner/optimizer.h"
#include "ccil/rng.h"

namespace ccil::nn {

// Everything needed to resume training bit-for-bit.
struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> parameters;
  AdamState optimizer;
  Rng rng;

  bool operator==(const Checkpoint&) const = default;
};

Checkpoint Capture(const nlohmann::json& config, const ParameterStore& store,
                   const AdamState& optimizer, const Rng& rng);

// Copies parameter values into `store`; names and shapes must match exactly
// (std::runtime_error otherwise).
void RestoreParameters(const Checkpoint& ckpt, ParameterStore& store);

nlohmann::json CheckpointToJson(const Checkpoint& ckpt);
Checkpoint CheckpointFromJson(const nlohmann::json& j);
void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint LoadCheckpoint(const std::string& path);

nlohmann::json TensorToJson(const Tensor& t);
Tensor TensorFromJson(const nlohmann::json& j);

}  // namespace ccil::nn
