#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ccil/lqr.h"
#include "ccil/network.h"
#include "ccil/scenario.h"
#include "ccil/toy.h"

namespace ccil {

struct RolloutRecord {
  std::vector<Pose2> executed;  // one pose per log step (fewer if truncated)
  double dt = 0.1;
  int start_step = 0;           // first step driven by the policy
  std::vector<std::vector<Pose2>> plans;  // global poses, one plan per tick
  std::vector<uint64_t> observation_digests;
  std::vector<AgentTrack> agents;  // replayed tracks, copied from the log
  uint64_t seed = 0;
  std::string policy;
  bool truncated = false;
  std::string reason;

  Trajectory ExecutedTrajectory() const { return Trajectory(executed, dt); }
  bool operator==(const RolloutRecord&) const = default;
};

// What a planner sees at a replay tick.
struct ReplayTick {
  const SceneContext* scene = nullptr;
  int step = 0;                        // index of the current executed pose
  const std::vector<Pose2>* executed;  // executed[0..step]
  Rng* rng = nullptr;                  // stream for this tick
  uint64_t seed = 0;                   // replay seed, for earlier ticks' streams
};

class ReplayPolicy {
 public:
  virtual ~ReplayPolicy() = default;
  virtual std::string name() const = 0;
  // Steps of executed history needed before the first tick.
  virtual int WarmupSteps() const { return 0; }
  // Future global poses, the first being the pose one step ahead.
  virtual std::vector<Pose2> Plan(const ReplayTick& tick,
                                  uint64_t* observation_digest) = 0;
};

// Replays the recorded future (clamped at the end of the log).
class OraclePolicy : public ReplayPolicy {
 public:
  explicit OraclePolicy(int horizon = 15) : horizon_(horizon) {}
  std::string name() const override { return "oracle"; }
  std::vector<Pose2> Plan(const ReplayTick& tick, uint64_t* digest) override;

 private:
  int horizon_;
};

// Recorded future plus i.i.d. Gaussian noise on every planned position and
// heading. Targets stay on the log, so errors do not accumulate.
class NoisyOraclePolicy : public ReplayPolicy {
 public:
  NoisyOraclePolicy(int horizon, double position_std, double heading_std)
      : horizon_(horizon), position_std_(position_std), heading_std_(heading_std) {}
  std::string name() const override { return "noisy_oracle"; }
  std::vector<Pose2> Plan(const ReplayTick& tick, uint64_t* digest) override;

 private:
  int horizon_;
  double position_std_;
  double heading_std_;
};

// The trained context-conditioned network. Observations of earlier ticks
// are rebuilt from the same per-step streams, so they match what was seen.
class NetworkPolicy : public ReplayPolicy {
 public:
  NetworkPolicy(const CcilNetwork& network, FrameSpec frame)
      : network_(network), frame_(frame) {}
  std::string name() const override { return "ccil"; }
  int WarmupSteps() const override;
  std::vector<Pose2> Plan(const ReplayTick& tick, uint64_t* digest) override;

 private:
  const CcilNetwork& network_;
  FrameSpec frame_;
};

struct ReplayOptions {
  bool use_lqr = true;
  lqr::Weights weights;
  uint64_t seed = 0;
  int lqr_history = 3;  // executed poses used for the initial state
};

// Closed-loop log replay: the ego follows the first step of each (optionally
// LQR-smoothed) plan while agents follow the log. Executed poses before the
// policy's warm-up come from the log.
RolloutRecord RunLogReplay(const ScenarioLog& log, ReplayPolicy& policy,
                           const ReplayOptions& options);

// Per-tick stream of a replay with the given seed.
Rng TickStream(uint64_t seed, int step);

// Ring rollout: history primed with exact ring motion from a uniform random
// start angle, then `steps` policy steps. Frame noise at evaluation uses the
// policy's training std.
RolloutRecord RunToyRollout(const toy::ToyPolicy& policy, double radius,
                            int steps, uint64_t seed);

std::string RolloutToJson(const RolloutRecord& rollout);
// step,time,x,y,heading
std::string TrajectoryCsv(const std::vector<Pose2>& poses, double dt);

}  // namespace ccil
