#include "ccil/network.h"

#include <stdexcept>

namespace ccil {

using nn::Tensor;
using nn::Var;

void NetworkConfig::Validate() const {
  if (hidden_size < 1 || heads < 1 || local_layers < 1 || global_layers < 1 ||
      causal_layers < 1 || history < 1 || interval < 1 || future < 1 ||
      toy_hidden < 1 || toy_layers < 1) {
    throw std::invalid_argument("network sizes and counts must be >= 1");
  }
  if (hidden_size % heads != 0) {
    throw std::invalid_argument("heads must divide hidden_size");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must lie in [0, 1)");
  }
}

Pose2 PosePrediction::At(int h, int t) const {
  if (h < 0 || h >= history || t < 1 || t > future) {
    throw std::out_of_range("PosePrediction index");
  }
  const int row = history - 1 - h;
  return {poses.at(row, 3 * (t - 1)), poses.at(row, 3 * (t - 1) + 1),
          poses.at(row, 3 * (t - 1) + 2)};
}

std::vector<Pose2> PosePrediction::Current() const {
  std::vector<Pose2> out;
  for (int t = 1; t <= future; ++t) out.push_back(At(0, t));
  return out;
}

CcilNetwork::CcilNetwork(const NetworkConfig& config,
                         const ObservationConfig& obs_config, uint64_t seed)
    : config_(config), obs_config_(obs_config) {
  config_.Validate();
  Rng rng(seed);
  const int d = config_.hidden_size;
  polyline_embed_ = nn::Linear(store_, "polyline_embed", kPolylineFeatures, d, rng);
  polygon_embed_ = nn::Linear(store_, "polygon_embed", kPolygonFeatures, d, rng);
  local_encoder_ = nn::Encoder(store_, "local", config_.local_layers, d,
                               config_.heads, config_.dropout_rate, rng);
  agent_mlp_ = nn::Mlp(store_, "agent_mlp", {AgentFeatureSize(obs_config_), d, d}, rng);
  goal_mlp_ = nn::Mlp(store_, "goal_mlp", {kGoalFeatures, d, d}, rng);
  global_encoder_ = nn::Encoder(store_, "global", config_.global_layers, d,
                                config_.heads, config_.dropout_rate, rng);
  step_embedding_ = store_.Create("step_embedding", {config_.history, d}, d, rng);
  temporal_encoder_ = nn::Encoder(store_, "temporal", config_.causal_layers, d,
                                  config_.heads, config_.dropout_rate, rng);
  decoder_ = nn::Linear(store_, "decoder", d, 3 * config_.future, rng);
}

namespace {

// Copies the valid rows of `src` grouped into blocks of `block` rows.
Tensor GatherRows(const Tensor& src, const std::vector<uint8_t>& row_mask,
                  const std::vector<uint8_t>& block_mask, int block,
                  std::vector<int>& segments) {
  std::vector<int> rows;
  for (size_t b = 0; b < block_mask.size(); ++b) {
    if (!block_mask[b]) continue;
    int count = 0;
    for (int k = 0; k < block; ++k) {
      const int r = static_cast<int>(b) * block + k;
      if (row_mask.empty() || row_mask[r]) {
        rows.push_back(r);
        ++count;
      }
    }
    if (count > 0) segments.push_back(count);
  }
  Tensor out({static_cast<int>(rows.size()), src.cols()});
  for (size_t i = 0; i < rows.size(); ++i) {
    for (int c = 0; c < src.cols(); ++c) out.at(static_cast<int>(i), c) = src.at(rows[i], c);
  }
  return out;
}

}  // namespace

Var CcilNetwork::EncodeStep(const ObservationFrame& obs, Rng& dropout_rng,
                            bool training) const {
  const int V = obs_config_.max_vectors_per_polyline;
  std::vector<int> polyline_segments;
  std::vector<int> polygon_segments;
  const Tensor pl = GatherRows(obs.polylines, obs.polyline_vector_mask,
                               obs.polyline_mask, V, polyline_segments);
  const Tensor pg = GatherRows(obs.polygons, {}, obs.polygon_mask,
                               kPolygonVectorCount, polygon_segments);

  std::vector<Var> tokens;
  const double cs = 1.0 / obs_config_.coordinate_scale;
  tokens.push_back(goal_mlp_.Forward(
      nn::Constant(Tensor({1, kGoalFeatures}, {obs.goal.x * cs, obs.goal.y * cs}))));

  std::vector<int> agent_segments;
  const Tensor agents =
      GatherRows(obs.agents, {}, obs.agent_mask, 1, agent_segments);
  if (agents.rows() > 0) tokens.push_back(agent_mlp_.Forward(nn::Constant(agents)));

  std::vector<Var> embedded;
  std::vector<int> segments;
  if (pl.rows() > 0) {
    embedded.push_back(polyline_embed_.Forward(nn::Constant(pl)));
    segments.insert(segments.end(), polyline_segments.begin(), polyline_segments.end());
  }
  if (pg.rows() > 0) {
    embedded.push_back(polygon_embed_.Forward(nn::Constant(pg)));
    segments.insert(segments.end(), polygon_segments.begin(), polygon_segments.end());
  }
  if (!embedded.empty()) {
    const Var x = embedded.size() == 1 ? embedded[0] : nn::ConcatRows(embedded);
    const std::vector<uint8_t> valid(x->value.rows(), 1);
    const Var local =
        local_encoder_.Forward(x, valid, false, dropout_rng, training, segments);
    std::vector<std::vector<int>> groups;
    int offset = 0;
    for (int len : segments) {
      std::vector<int> g(len);
      for (int i = 0; i < len; ++i) g[i] = offset + i;
      groups.push_back(std::move(g));
      offset += len;
    }
    tokens.push_back(nn::GroupMaxPool(local, groups));
  }
  const Var all = tokens.size() == 1 ? tokens[0] : nn::ConcatRows(tokens);
  const std::vector<uint8_t> valid(all->value.rows(), 1);
  const Var encoded = global_encoder_.Forward(all, valid, false, dropout_rng, training);
  return nn::SelectRows(encoded, {0});
}

Var CcilNetwork::Forward(std::span<const ObservationFrame> history,
                         Rng& dropout_rng, bool training) const {
  if (static_cast<int>(history.size()) != config_.history) {
    throw std::invalid_argument("expected " + std::to_string(config_.history) +
                                " observations, got " +
                                std::to_string(history.size()));
  }
  std::vector<Var> steps;
  steps.reserve(history.size());
  for (const auto& obs : history) steps.push_back(EncodeStep(obs, dropout_rng, training));
  const Var seq = nn::Add(nn::ConcatRows(steps), step_embedding_);
  const std::vector<uint8_t> valid(history.size(), 1);
  const Var temporal =
      temporal_encoder_.Forward(seq, valid, true, dropout_rng, training);
  return decoder_.Forward(temporal);
}

PosePrediction CcilNetwork::Predict(std::span<const ObservationFrame> history) const {
  Rng unused(0);
  const Var out = Forward(history, unused, false);
  PosePrediction p;
  p.poses = out->value;
  p.history = config_.history;
  p.future = config_.future;
  return p;
}

std::optional<CcilExample> MakeCcilExample(const SceneContext& scene, int now,
                                           const NetworkConfig& config,
                                           const FrameSpec& frame_spec,
                                           const ObservationConfig& obs_config,
                                           double auxiliary_weight, Rng& rng) {
  const ScenarioLog& log = *scene.log;
  const int H = config.history;
  const int I = config.interval;
  const int T = config.future;
  if (now - (H - 1) * I < 0 || now + T > static_cast<int>(log.size()) - 1) {
    return std::nullopt;
  }
  CcilExample ex;
  ex.targets = Tensor({H, 3 * T});
  ex.weights = Tensor({H, 3 * T});
  for (int i = 0; i < H; ++i) {
    const int h = H - 1 - i;
    const int step = now - h * I;
    const Frame frame = MakeFrame(frame_spec, log.ego[step], log.goal, rng);
    ex.observations.push_back(AssembleObservation(scene, step, frame, obs_config));
    for (int t = 1; t <= T; ++t) {
      const Pose2 target = frame.ToLocal(log.ego[step + t]);
      ex.targets.at(i, 3 * (t - 1)) = target.x;
      ex.targets.at(i, 3 * (t - 1) + 1) = target.y;
      ex.targets.at(i, 3 * (t - 1) + 2) = target.heading;
      for (int c = 0; c < 3; ++c) {
        ex.weights.at(i, 3 * (t - 1) + c) = h == 0 ? 1.0 : auxiliary_weight;
      }
    }
  }
  return ex;
}

Var CcilDataLoss(const Var& prediction, const CcilExample& example) {
  return nn::WeightedL1(prediction, example.targets, example.weights);
}

}  // namespace ccil
