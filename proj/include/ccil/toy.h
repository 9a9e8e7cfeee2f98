#pragma once

#include <vector>

#include "ccil/frames.h"
#include "ccil/learner/layers.h"
#include "ccil/observation.h"
#include "ccil/scenario.h"

namespace ccil::toy {

struct ToyConfig {
  int history = 10;       // past steps fed to every policy, current included
  int lane_points = 10;   // nearest lane points per step
  double lane_spacing = 1.0;
  double perturb_std = 1.0;  // CCIL frame noise, training and evaluation
  double jitter = 1.0;       // BC-perturb position jitter (uniform, per axis)
  int blend_steps = 5;       // BC-perturb return-to-path length
  int perturb_horizon = 10;  // BC-perturb output steps
  int hidden = 128;
  int layers = 2;  // linear layers
  int scenes = 200;
  int scene_steps = 100;
  int batch_size = 32;
  int train_steps = 10000;
  double learning_rate = 1e-4;
  double regularization = 1e-4;
  double eval_radius = 50.0;
  int eval_steps = 100;
  double off_route_threshold = 2.0;

  void Validate() const;
  bool operator==(const ToyConfig&) const = default;
};

// Ring lane as open point list (no repeated closing point).
struct Ring {
  double radius = 50.0;
  std::vector<Vec2> points;

  explicit Ring(double r, double spacing = 1.0);
  // The `count` points nearest to `p`, ordered counter-clockwise.
  std::vector<Vec2> NearestPoints(const Vec2& p, int count) const;
};

struct ToyScene {
  ScenarioLog log;
  Ring ring;
};

// Ring scenes with radii uniform in [10, 100] m.
std::vector<ToyScene> MakeToyDataset(const ToyConfig& config, Rng& rng);

int InputSize(PolicyKind kind, const ToyConfig& config);
int OutputSize(PolicyKind kind, const ToyConfig& config);

// CCIL input: for each history step (oldest first) the nearest lane points
// in that step's centre-oriented perturbed frame. `positions` are the ego
// positions of the history steps; `frames` one per step.
std::vector<double> CcilInput(const Ring& ring, const std::vector<Vec2>& positions,
                              const std::vector<Frame>& frames,
                              const ToyConfig& config);

// BC input: past poses then the nearest lane points, all in the current ego
// frame.
std::vector<double> BcInput(const Ring& ring, const std::vector<Pose2>& poses,
                            const ToyConfig& config);

struct ToyExample {
  std::vector<double> input;
  std::vector<double> target;
};

// Sample at log index `now`. CCIL targets the next pose in the current
// frame; BC the next pose relative to the current pose; BC-perturb jitters
// the current position and targets the next `perturb_horizon` poses
// blending back to the recorded path.
ToyExample MakeToyExample(PolicyKind kind, const ToyScene& scene, int now,
                          const ToyConfig& config, Rng& rng);

// Valid `now` range for a scene of `poses` poses.
int FirstSampleIndex(const ToyConfig& config);
int LastSampleIndex(PolicyKind kind, const ToyConfig& config, int poses);

class ToyPolicy {
 public:
  ToyPolicy(PolicyKind kind, const ToyConfig& config, uint64_t seed);

  PolicyKind kind() const { return kind_; }
  const ToyConfig& config() const { return config_; }
  nn::ParameterStore& parameters() { return store_; }
  const nn::ParameterStore& parameters() const { return store_; }

  // Batched forward: input [B, InputSize] -> [B, OutputSize].
  nn::Var Forward(const nn::Var& input) const { return mlp_.Forward(input); }
  std::vector<double> Predict(const std::vector<double>& input) const;

  // Next global pose given the executed history (oldest first, `history`
  // entries). Frame noise for CCIL is drawn from `rng`.
  Pose2 NextPose(const Ring& ring, const std::vector<Pose2>& history,
                 Rng& rng) const;

 private:
  PolicyKind kind_;
  ToyConfig config_;
  nn::ParameterStore store_;
  nn::Mlp mlp_;
};

// Frames for the CCIL toy: origin perturbed around each position, x-axis
// toward the ring centre.
std::vector<Frame> CenterFrames(const std::vector<Vec2>& positions, double std,
                                Rng& rng);

}  // namespace ccil::toy
