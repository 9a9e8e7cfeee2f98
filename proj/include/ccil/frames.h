#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccil/geometry.h"
#include "ccil/rng.h"

namespace ccil {

enum class FrameKind {
  kEgoPerturbedGoalOriented,
  kEgoPerturbedCenterOriented,
  kEgoCentric,
};

std::string ToString(FrameKind kind);
FrameKind ParseFrameKind(const std::string& s);

struct FrameSpec {
  FrameKind kind = FrameKind::kEgoPerturbedGoalOriented;
  double perturb_std = 2.0;  // meters, per axis
  uint64_t seed = 0;

  void Validate() const;
  bool operator==(const FrameSpec&) const = default;
};

// Planar frame: origin plus a unit x-axis.
struct Frame {
  Vec2 origin;
  Vec2 x_axis{1.0, 0.0};

  Vec2 ToLocal(const Vec2& p) const { return TransformToFrame(p, origin, x_axis); }
  Vec2 ToGlobal(const Vec2& p) const {
    return TransformFromFrame(p, origin, x_axis);
  }
  double Angle() const { return std::atan2(x_axis.y, x_axis.x); }
  Pose2 ToLocal(const Pose2& p) const;
  Pose2 ToGlobal(const Pose2& p) const;

  bool operator==(const Frame&) const = default;
};

// Anchored kinds: origin = ego position + N(0, std^2 I), x-axis toward the
// anchor. Only a position is taken, so heading cannot leak in. Throws for
// kEgoCentric and when the origin lands within 1e-9 of the anchor.
Frame MakeAnchoredFrame(const FrameSpec& spec, const Vec2& ego_position,
                        const Vec2& anchor, Rng& rng);

// Dispatches on spec.kind; kEgoCentric uses the pose heading and draws no
// noise.
Frame MakeFrame(const FrameSpec& spec, const Pose2& ego_pose,
                const Vec2& anchor, Rng& rng);

// One independently perturbed frame per history step.
std::vector<Frame> FramePerHistoryStep(const FrameSpec& spec,
                                       std::span<const Pose2> ego_poses,
                                       const Vec2& anchor, Rng& rng);

}  // namespace ccil
