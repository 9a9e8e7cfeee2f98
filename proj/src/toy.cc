#include "ccil/toy.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ccil::toy {

void ToyConfig::Validate() const {
  if (history < 1 || lane_points < 1 || perturb_horizon < 1 || blend_steps < 1 ||
      hidden < 1 || layers < 1 || scenes < 1 || scene_steps < 1 ||
      batch_size < 1 || train_steps < 0 || eval_steps < 1) {
    throw std::invalid_argument("toy counts must be positive");
  }
  if (!(lane_spacing > 0.0) || !(perturb_std >= 0.0) || !(jitter >= 0.0) ||
      !(learning_rate >= 0.0) || !(regularization >= 0.0) ||
      !(off_route_threshold > 0.0)) {
    throw std::invalid_argument("toy scalars out of range");
  }
  if (!(eval_radius >= kToyMinRadius && eval_radius <= kToyMaxRadius)) {
    throw std::invalid_argument("toy eval_radius must lie in [10, 100]");
  }
  if (scene_steps < history + perturb_horizon) {
    throw std::invalid_argument("toy scenes too short for history and horizon");
  }
}

Ring::Ring(double r, double spacing) : radius(r) {
  const MapData map = synthetic::RingMap(r, spacing);
  points = map.polylines.at(0).points;
  points.pop_back();
}

std::vector<Vec2> Ring::NearestPoints(const Vec2& p, int count) const {
  const int n = static_cast<int>(points.size());
  count = std::min(count, n);
  const double step = 2.0 * kPi / n;
  double a = std::atan2(p.y, p.x);
  if (a < 0.0) a += 2.0 * kPi;
  const int center = static_cast<int>(std::lround(a / step)) % n;
  const int reach = std::min(count, n / 2);
  struct Cand {
    int offset;
    double d2;
  };
  std::vector<Cand> cands;
  for (int o = -reach; o <= reach; ++o) {
    if (o == reach && 2 * reach == n) continue;  // same point as -reach
    const int i = ((center + o) % n + n) % n;
    cands.push_back({o, (points[i] - p).SquaredNorm()});
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& x, const Cand& y) { return x.d2 < y.d2; });
  cands.resize(std::min<size_t>(count, cands.size()));
  std::sort(cands.begin(), cands.end(),
            [](const Cand& x, const Cand& y) { return x.offset < y.offset; });
  std::vector<Vec2> out;
  for (const auto& c : cands) out.push_back(points[((center + c.offset) % n + n) % n]);
  return out;
}

std::vector<ToyScene> MakeToyDataset(const ToyConfig& config, Rng& rng) {
  std::vector<ToyScene> scenes;
  scenes.reserve(config.scenes);
  for (int i = 0; i < config.scenes; ++i) {
    Rng scene_rng = rng.Split(i);
    const double radius = scene_rng.Uniform(kToyMinRadius, kToyMaxRadius);
    ScenarioLog log = MakeRingScenario(radius, config.scene_steps, scene_rng);
    scenes.push_back({std::move(log), Ring(radius, config.lane_spacing)});
  }
  return scenes;
}

int InputSize(PolicyKind kind, const ToyConfig& config) {
  if (kind == PolicyKind::kCcil) return config.history * config.lane_points * 2;
  return config.history * 3 + config.lane_points * 2;
}

int OutputSize(PolicyKind kind, const ToyConfig& config) {
  return kind == PolicyKind::kBcPerturb ? 3 * config.perturb_horizon : 3;
}

std::vector<Frame> CenterFrames(const std::vector<Vec2>& positions, double std,
                                Rng& rng) {
  FrameSpec spec;
  spec.kind = FrameKind::kEgoPerturbedCenterOriented;
  spec.perturb_std = std;
  std::vector<Frame> frames;
  frames.reserve(positions.size());
  for (const auto& p : positions) {
    frames.push_back(MakeAnchoredFrame(spec, p, {0.0, 0.0}, rng));
  }
  return frames;
}

std::vector<double> CcilInput(const Ring& ring, const std::vector<Vec2>& positions,
                              const std::vector<Frame>& frames,
                              const ToyConfig& config) {
  if (positions.size() != frames.size() ||
      static_cast<int>(positions.size()) != config.history) {
    throw std::invalid_argument("CcilInput: need one frame per history step");
  }
  std::vector<double> in;
  in.reserve(InputSize(PolicyKind::kCcil, config));
  for (size_t k = 0; k < positions.size(); ++k) {
    for (const Vec2& q : ring.NearestPoints(positions[k], config.lane_points)) {
      const Vec2 l = frames[k].ToLocal(q);
      in.push_back(l.x);
      in.push_back(l.y);
    }
  }
  return in;
}

namespace {

Frame EgoFrame(const Pose2& pose) {
  return {pose.Position(), {std::cos(pose.heading), std::sin(pose.heading)}};
}

void AppendPose(std::vector<double>& v, const Pose2& p) {
  v.push_back(p.x);
  v.push_back(p.y);
  v.push_back(p.heading);
}

Pose2 Shifted(const Pose2& p, const Vec2& d) { return {p.x + d.x, p.y + d.y, p.heading}; }

}  // namespace

std::vector<double> BcInput(const Ring& ring, const std::vector<Pose2>& poses,
                            const ToyConfig& config) {
  if (static_cast<int>(poses.size()) != config.history) {
    throw std::invalid_argument("BcInput: wrong history length");
  }
  const Frame ego = EgoFrame(poses.back());
  std::vector<double> in;
  in.reserve(InputSize(PolicyKind::kBc, config));
  for (const auto& p : poses) AppendPose(in, ego.ToLocal(p));
  const auto pts = ring.NearestPoints(poses.back().Position(), config.lane_points);
  for (const Vec2& q : pts) {
    const Vec2 l = ego.ToLocal(q);
    in.push_back(l.x);
    in.push_back(l.y);
  }
  return in;
}

int FirstSampleIndex(const ToyConfig& config) { return config.history - 1; }

int LastSampleIndex(PolicyKind kind, const ToyConfig& config, int poses) {
  const int ahead = kind == PolicyKind::kBcPerturb ? config.perturb_horizon : 1;
  return poses - 1 - ahead;
}

ToyExample MakeToyExample(PolicyKind kind, const ToyScene& scene, int now,
                          const ToyConfig& config, Rng& rng) {
  const auto& gt = scene.log.ego;
  if (now < FirstSampleIndex(config) ||
      now > LastSampleIndex(kind, config, static_cast<int>(gt.size()))) {
    throw std::out_of_range("toy sample index outside the scene");
  }
  const int H = config.history;
  ToyExample ex;
  if (kind == PolicyKind::kCcil) {
    std::vector<Vec2> positions;
    for (int k = now - H + 1; k <= now; ++k) positions.push_back(gt[k].Position());
    const auto frames = CenterFrames(positions, config.perturb_std, rng);
    ex.input = CcilInput(scene.ring, positions, frames, config);
    AppendPose(ex.target, frames.back().ToLocal(gt[now + 1]));
    return ex;
  }
  std::vector<Pose2> history(gt.begin() + (now - H + 1), gt.begin() + now + 1);
  if (kind == PolicyKind::kBc) {
    ex.input = BcInput(scene.ring, history, config);
    AppendPose(ex.target, EgoFrame(gt[now]).ToLocal(gt[now + 1]));
    return ex;
  }
  const Vec2 delta{rng.Uniform(-config.jitter, config.jitter),
                   rng.Uniform(-config.jitter, config.jitter)};
  auto blend = [&](int k) {
    return std::max(0.0, 1.0 - static_cast<double>(k) / config.blend_steps);
  };
  for (int i = 0; i < H; ++i) {
    const int lag = H - 1 - i;
    history[i] = Shifted(history[i], delta * blend(lag));
  }
  ex.input = BcInput(scene.ring, history, config);
  const Frame ego = EgoFrame(history.back());
  for (int k = 1; k <= config.perturb_horizon; ++k) {
    AppendPose(ex.target, ego.ToLocal(Shifted(gt[now + k], delta * blend(k))));
  }
  return ex;
}

ToyPolicy::ToyPolicy(PolicyKind kind, const ToyConfig& config, uint64_t seed)
    : kind_(kind), config_(config) {
  config_.Validate();
  Rng rng(seed);
  std::vector<int> sizes{InputSize(kind, config_)};
  for (int l = 1; l < config_.layers; ++l) sizes.push_back(config_.hidden);
  sizes.push_back(OutputSize(kind, config_));
  mlp_ = nn::Mlp(store_, "mlp", sizes, rng);
}

std::vector<double> ToyPolicy::Predict(const std::vector<double>& input) const {
  const int n = static_cast<int>(input.size());
  const nn::Var out = Forward(nn::Constant(nn::Tensor({1, n}, input)));
  return out->value.values();
}

Pose2 ToyPolicy::NextPose(const Ring& ring, const std::vector<Pose2>& history,
                          Rng& rng) const {
  if (static_cast<int>(history.size()) != config_.history) {
    throw std::invalid_argument("NextPose: wrong history length");
  }
  if (kind_ == PolicyKind::kCcil) {
    std::vector<Vec2> positions;
    for (const auto& p : history) positions.push_back(p.Position());
    const auto frames = CenterFrames(positions, config_.perturb_std, rng);
    const auto out = Predict(CcilInput(ring, positions, frames, config_));
    return frames.back().ToGlobal(Pose2(out[0], out[1], out[2]));
  }
  const auto out = Predict(BcInput(ring, history, config_));
  return EgoFrame(history.back()).ToGlobal(Pose2(out[0], out[1], out[2]));
}

}  // namespace ccil::toy
