#include "ccil/frames.h"

#include <stdexcept>

namespace ccil {

std::string ToString(FrameKind kind) {
  switch (kind) {
    case FrameKind::kEgoPerturbedGoalOriented:
      return "ego_perturbed_goal_oriented";
    case FrameKind::kEgoPerturbedCenterOriented:
      return "ego_perturbed_center_oriented";
    case FrameKind::kEgoCentric:
      return "ego_centric";
  }
  return "";
}

FrameKind ParseFrameKind(const std::string& s) {
  if (s == "ego_perturbed_goal_oriented") return FrameKind::kEgoPerturbedGoalOriented;
  if (s == "ego_perturbed_center_oriented") {
    return FrameKind::kEgoPerturbedCenterOriented;
  }
  if (s == "ego_centric") return FrameKind::kEgoCentric;
  throw std::invalid_argument("unknown frame kind '" + s + "'");
}

void FrameSpec::Validate() const {
  if (!(perturb_std >= 0.0)) {
    throw std::invalid_argument("FrameSpec: perturb_std must be >= 0");
  }
}

Pose2 Frame::ToLocal(const Pose2& p) const {
  const Vec2 q = ToLocal(p.Position());
  return {q.x, q.y, p.heading - Angle()};
}

Pose2 Frame::ToGlobal(const Pose2& p) const {
  const Vec2 q = ToGlobal(Vec2{p.x, p.y});
  return {q.x, q.y, p.heading + Angle()};
}

Frame MakeAnchoredFrame(const FrameSpec& spec, const Vec2& ego_position,
                        const Vec2& anchor, Rng& rng) {
  spec.Validate();
  if (spec.kind == FrameKind::kEgoCentric) {
    throw std::invalid_argument("ego-centric frames need the ego heading");
  }
  Frame f;
  f.origin = ego_position;
  if (spec.perturb_std > 0.0) {
    const double dx = rng.Normal(0.0, spec.perturb_std);
    const double dy = rng.Normal(0.0, spec.perturb_std);
    f.origin = f.origin + Vec2{dx, dy};
  }
  const Vec2 dir = anchor - f.origin;
  const double len = dir.Norm();
  if (len <= 1e-9) {
    throw std::invalid_argument("frame origin coincides with its anchor");
  }
  f.x_axis = dir * (1.0 / len);
  return f;
}

Frame MakeFrame(const FrameSpec& spec, const Pose2& ego_pose,
                const Vec2& anchor, Rng& rng) {
  if (spec.kind == FrameKind::kEgoCentric) {
    spec.Validate();
    return {ego_pose.Position(),
            {std::cos(ego_pose.heading), std::sin(ego_pose.heading)}};
  }
  return MakeAnchoredFrame(spec, ego_pose.Position(), anchor, rng);
}

std::vector<Frame> FramePerHistoryStep(const FrameSpec& spec,
                                       std::span<const Pose2> ego_poses,
                                       const Vec2& anchor, Rng& rng) {
  std::vector<Frame> frames;
  frames.reserve(ego_poses.size());
  for (const auto& pose : ego_poses) {
    frames.push_back(MakeFrame(spec, pose, anchor, rng));
  }
  return frames;
}

}  // namespace ccil
