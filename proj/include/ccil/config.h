#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccil/frames.h"
#include "ccil/learner/optimizer.h"
#include "ccil/lqr.h"
#include "ccil/metrics.h"
#include "ccil/network.h"
#include "ccil/observation.h"
#include "ccil/toy.h"

namespace ccil {

struct OptimizerConfig {
  nn::AdamOptions adam{5e-4, 0.9, 0.999, 1e-8, 10000};
  int batch_size = 128;
  int64_t steps = 10000;
  LossWeights loss;

  bool operator==(const OptimizerConfig& o) const {
    return adam == o.adam && batch_size == o.batch_size && steps == o.steps &&
           loss.auxiliary == o.loss.auxiliary &&
           loss.regularization == o.loss.regularization;
  }
};

struct DatasetConfig {
  std::string map_kind = "intersection";
  std::string map_path;
  std::string scenarios_path;
  int scenes = 20;
  double duration = 25.0;
  double frequency = 10.0;

  bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
  FrameSpec frame;
  NetworkConfig network;
  ObservationConfig observation;
  OptimizerConfig optimizer;
  toy::ToyConfig toy;
  lqr::Weights lqr;
  DatasetConfig dataset;
  MetricThresholds metrics;
  std::vector<uint64_t> seeds{0, 1, 2};
  int jobs = 1;

  // Toy settings with the MLP size taken from the network section.
  toy::ToyConfig ToyWithNetwork() const;
  void Validate() const;
};

// Missing keys keep their defaults; unknown keys and bad values throw
// std::invalid_argument.
ExperimentConfig ParseConfig(const nlohmann::json& j);
ExperimentConfig LoadConfig(const std::string& path);
nlohmann::json ConfigToJson(const ExperimentConfig& c);

// FNV-1a over the canonical JSON text.
uint64_t Fnv1a(const std::string& text);
std::string HexDigest(uint64_t h);

}  // namespace ccil
