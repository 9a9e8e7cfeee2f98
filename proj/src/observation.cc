#include "ccil/observation.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace ccil {

std::string ToString(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kCcil: return "ccil";
    case PolicyKind::kBc: return "bc";
    case PolicyKind::kBcPerturb: return "bc_perturb";
  }
  return "ccil";
}

PolicyKind ParsePolicyKind(const std::string& s) {
  if (s == "ccil") return PolicyKind::kCcil;
  if (s == "bc") return PolicyKind::kBc;
  if (s == "bc_perturb" || s == "bc-perturb") return PolicyKind::kBcPerturb;
  throw std::invalid_argument("unknown policy kind '" + s + "'");
}

namespace {

int CountSet(const std::vector<uint8_t>& m) {
  return static_cast<int>(std::count(m.begin(), m.end(), 1));
}

}  // namespace

int ObservationFrame::ValidPolylines() const { return CountSet(polyline_mask); }
int ObservationFrame::ValidPolygons() const { return CountSet(polygon_mask); }
int ObservationFrame::ValidAgents() const { return CountSet(agent_mask); }

SceneContext SceneContext::Build(const ScenarioLog& log) {
  SceneContext s;
  s.log = &log;
  s.graph = VectorMapGraph::Build(log.map);
  s.goal_vector = s.graph.NearestVector(log.goal);
  return s;
}

ObservationFrame AssembleObservation(const SceneContext& scene, int step,
                                     const Frame& frame,
                                     const ObservationConfig& config) {
  if (scene.log == nullptr) throw std::invalid_argument("scene has no log");
  const ScenarioLog& log = *scene.log;
  if (step < 0 || static_cast<size_t>(step) >= log.size()) {
    throw std::out_of_range("observation step outside the log");
  }
  const int P = config.limits.max_polylines;
  const int V = config.max_vectors_per_polyline;
  const int G = config.limits.max_polygons;
  const int A = config.max_agents;
  const double cs = 1.0 / config.coordinate_scale;

  ObservationFrame obs;
  obs.frame = frame;
  obs.polylines = nn::Tensor({P * V, kPolylineFeatures});
  obs.polyline_vector_mask.assign(P * V, 0);
  obs.polyline_mask.assign(P, 0);
  obs.polygons = nn::Tensor({G * kPolygonVectorCount, kPolygonFeatures});
  obs.polygon_mask.assign(G, 0);
  obs.agents = nn::Tensor({A, AgentFeatureSize(config)});
  obs.agent_mask.assign(A, 0);
  obs.goal = frame.ToLocal(log.goal);

  const Neighborhood hood =
      QueryNeighborhood(scene.graph, frame.origin, scene.goal_vector, config.limits);

  for (size_t p = 0; p < hood.polylines.size() && static_cast<int>(p) < P; ++p) {
    std::vector<MapVector> vecs = hood.polylines[p].vectors;
    if (static_cast<int>(vecs.size()) > V) {
      // Keep the V vectors closest to the origin, still in sequence order.
      std::vector<size_t> idx(vecs.size());
      for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        return (vecs[a].start - frame.origin).SquaredNorm() <
               (vecs[b].start - frame.origin).SquaredNorm();
      });
      idx.resize(V);
      std::sort(idx.begin(), idx.end());
      std::vector<MapVector> kept;
      for (size_t i : idx) kept.push_back(vecs[i]);
      vecs = std::move(kept);
    }
    obs.polyline_mask[p] = 1;
    for (size_t k = 0; k < vecs.size(); ++k) {
      const MapVector& mv = vecs[k];
      const int row = static_cast<int>(p) * V + static_cast<int>(k);
      const Vec2 s = frame.ToLocal(mv.start);
      const Vec2 e = frame.ToLocal(mv.end);
      double* f = &obs.polylines.at(row, 0);
      f[0] = s.x * cs;
      f[1] = s.y * cs;
      f[2] = e.x * cs;
      f[3] = e.y * cs;
      f[4] = mv.lane_width ? 1.0 : 0.0;
      f[5] = mv.lane_width ? *mv.lane_width * cs : 0.0;
      f[6] = mv.traffic_light == TrafficLight::kNone ? 1.0 : 0.0;
      f[7] = mv.traffic_light == TrafficLight::kRed ? 1.0 : 0.0;
      f[8] = mv.traffic_light == TrafficLight::kGreen ? 1.0 : 0.0;
      f[9] = mv.dist_to_goal ? 1.0 : 0.0;
      f[10] = mv.dist_to_goal ? *mv.dist_to_goal / config.distance_scale : 0.0;
      obs.polyline_vector_mask[row] = 1;
    }
  }

  for (size_t g = 0; g < hood.polygons.size() && static_cast<int>(g) < G; ++g) {
    const MapPolygon& poly = *hood.polygons[g].polygon;
    obs.polygon_mask[g] = 1;
    for (int k = 0; k < kPolygonVectorCount && k < static_cast<int>(poly.vectors.size());
         ++k) {
      const int row = static_cast<int>(g) * kPolygonVectorCount + k;
      const Vec2 s = frame.ToLocal(poly.vectors[k].start);
      const Vec2 e = frame.ToLocal(poly.vectors[k].end);
      double* f = &obs.polygons.at(row, 0);
      f[0] = s.x * cs;
      f[1] = s.y * cs;
      f[2] = e.x * cs;
      f[3] = e.y * cs;
      f[4 + static_cast<int>(poly.type)] = 1.0;
    }
  }

  struct Candidate {
    size_t index;
    double distance;
  };
  std::vector<Candidate> near;
  for (size_t i = 0; i < log.agents.size(); ++i) {
    const double d = Distance(log.agents[i].poses[step].Position(), frame.origin);
    if (d <= config.agent_radius) near.push_back({i, d});
  }
  std::stable_sort(near.begin(), near.end(), [&](const Candidate& a, const Candidate& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return log.agents[a.index].id < log.agents[b.index].id;
  });
  if (static_cast<int>(near.size()) > A) near.resize(A);
  const double frame_angle = frame.Angle();
  for (size_t r = 0; r < near.size(); ++r) {
    const AgentTrack& agent = log.agents[near[r].index];
    obs.agent_mask[r] = 1;
    double* f = &obs.agents.at(static_cast<int>(r), 0);
    for (int k = 0; k < config.agent_history; ++k) {
      const int lag = config.agent_history - 1 - k;  // oldest first
      const int s = step - lag;
      double* sf = f + k * kAgentStepFeatures;
      if (s < 0) continue;
      const Pose2& pose = agent.poses[s];
      const Vec2 local = frame.ToLocal(pose.Position());
      const double yaw = pose.heading - frame_angle;
      sf[0] = local.x * cs;
      sf[1] = local.y * cs;
      sf[2] = std::cos(yaw);
      sf[3] = std::sin(yaw);
      sf[4] = -lag * log.dt();
      sf[5] = 1.0;
    }
    double* st = f + config.agent_history * kAgentStepFeatures;
    st[0] = agent.length * cs;
    st[1] = agent.width * cs;
    st[2 + static_cast<int>(agent.type)] = 1.0;
  }
  return obs;
}

namespace {

struct Fnv {
  uint64_t h = 14695981039346656037ULL;
  void Bytes(const void* p, size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  }
  void Tensor(const nn::Tensor& t) { Bytes(t.data(), t.size() * sizeof(double)); }
  void Mask(const std::vector<uint8_t>& m) { Bytes(m.data(), m.size()); }
};

}  // namespace

uint64_t Digest(const ObservationFrame& obs) {
  Fnv f;
  f.Tensor(obs.polylines);
  f.Mask(obs.polyline_vector_mask);
  f.Mask(obs.polyline_mask);
  f.Tensor(obs.polygons);
  f.Mask(obs.polygon_mask);
  f.Tensor(obs.agents);
  f.Mask(obs.agent_mask);
  const double g[2] = {obs.goal.x, obs.goal.y};
  f.Bytes(g, sizeof(g));
  return f.h;
}

}  // namespace ccil
