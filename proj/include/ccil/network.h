#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ccil/learner/layers.h"
#include "ccil/observation.h"

namespace ccil {

struct NetworkConfig {
  int hidden_size = 128;
  int heads = 8;
  double dropout_rate = 0.1;
  int local_layers = 3;
  int global_layers = 6;
  int causal_layers = 3;
  int history = 15;   // H
  int interval = 2;   // I
  int future = 15;    // T
  int toy_hidden = 128;
  int toy_layers = 2;  // linear layers in the toy MLP

  void Validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Predictions for every history step: row h of `poses` belongs to the step
// h*I in the past (row 0 = now) and holds T poses (x, y, heading) in that
// step's frame.
struct PosePrediction {
  nn::Tensor poses;  // [H, T * 3]
  int history = 0;
  int future = 0;

  Pose2 At(int h, int t) const;  // t in 1..T
  std::vector<Pose2> Current() const;
};

// Spatial encoder per step (local attention over map vectors, max-pool,
// global attention over goal/agents/polylines/polygons), causal temporal
// encoder over the H step features, linear pose decoder.
class CcilNetwork {
 public:
  CcilNetwork(const NetworkConfig& config, const ObservationConfig& obs_config,
              uint64_t seed);

  // `history` is chronological (oldest first) and must have H entries.
  // Output rows follow the same order: row H-1 is the current step.
  nn::Var Forward(std::span<const ObservationFrame> history, Rng& dropout_rng,
                  bool training) const;
  PosePrediction Predict(std::span<const ObservationFrame> history) const;

  // Per-step feature o_t (exposed for tests).
  nn::Var EncodeStep(const ObservationFrame& obs, Rng& dropout_rng,
                     bool training) const;

  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }
  const NetworkConfig& config() const { return config_; }
  const ObservationConfig& observation_config() const { return obs_config_; }

 private:
  NetworkConfig config_;
  ObservationConfig obs_config_;
  nn::ParameterStore store_;
  nn::Linear polyline_embed_;
  nn::Linear polygon_embed_;
  nn::Encoder local_encoder_;
  nn::Mlp agent_mlp_;
  nn::Mlp goal_mlp_;
  nn::Encoder global_encoder_;
  nn::Var step_embedding_;
  nn::Encoder temporal_encoder_;
  nn::Linear decoder_;
};

struct LossWeights {
  double auxiliary = 0.3;       // mu
  double regularization = 1e-4;  // lambda
};

// Inputs and targets for one training sample of the full pipeline.
struct CcilExample {
  std::vector<ObservationFrame> observations;  // H, oldest first
  nn::Tensor targets;  // [H, T * 3], rows in observation order
  nn::Tensor weights;  // 1 for the current step, mu for auxiliary rows
};

// Observations at steps now - h*I (frames perturbed around ground-truth ego
// positions, x-axis toward the goal) and targets p_{now - hI + t} expressed
// in frame h. Empty when the log is too short on either side.
std::optional<CcilExample> MakeCcilExample(const SceneContext& scene, int now,
                                           const NetworkConfig& config,
                                           const FrameSpec& frame_spec,
                                           const ObservationConfig& obs_config,
                                           double auxiliary_weight, Rng& rng);

// Data term of the training loss for one example:
// sum_t |p_t - p^0_t|_1 + mu * sum_{h>0} |p_{t-hI} - p^{hI}_t|_1.
nn::Var CcilDataLoss(const nn::Var& prediction, const CcilExample& example);

}  // namespace ccil
