#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ccil/frames.h"
#include "ccil/learner/tensor.h"
#include "ccil/mapgraph.h"
#include "ccil/scenario.h"

namespace ccil {

enum class PolicyKind { kCcil, kBc, kBcPerturb };

std::string ToString(PolicyKind kind);
PolicyKind ParsePolicyKind(const std::string& s);

struct ObservationConfig {
  NeighborhoodLimits limits;
  int max_vectors_per_polyline = 24;
  double agent_radius = 50.0;
  int max_agents = 30;
  int agent_history = 3;  // past two steps plus the current one
  // Coordinates are divided by this before entering the network.
  double coordinate_scale = 10.0;
  double distance_scale = 100.0;

  bool operator==(const ObservationConfig&) const = default;
};

// Per-row feature layouts.
constexpr int kPolylineFeatures = 11;  // start, end, lane width (flag, value), light one-hot, goal (flag, dist)
constexpr int kPolygonFeatures = 9;    // start, end, type one-hot
constexpr int kAgentStepFeatures = 6;  // x, y, cos, sin, relative time, present
constexpr int kAgentStaticFeatures = 5;  // length, width, type one-hot
constexpr int kGoalFeatures = 2;

inline int AgentFeatureSize(const ObservationConfig& c) {
  return c.agent_history * kAgentStepFeatures + kAgentStaticFeatures;
}

// One step of context, padded to fixed sizes. Row (p * V + k) of
// `polylines` is vector k of polyline slot p; padded rows are zero and
// have a zero mask entry.
struct ObservationFrame {
  Frame frame;
  nn::Tensor polylines;                // [P * V, kPolylineFeatures]
  std::vector<uint8_t> polyline_vector_mask;  // P * V
  std::vector<uint8_t> polyline_mask;         // P
  nn::Tensor polygons;                 // [G * 20, kPolygonFeatures]
  std::vector<uint8_t> polygon_mask;   // G
  nn::Tensor agents;                   // [A, AgentFeatureSize]
  std::vector<uint8_t> agent_mask;     // A
  Vec2 goal;                           // frame coordinates, meters

  int ValidPolylines() const;
  int ValidPolygons() const;
  int ValidAgents() const;
  bool operator==(const ObservationFrame&) const = default;
};

// Map and goal bookkeeping shared by every step of a scene.
struct SceneContext {
  const ScenarioLog* log = nullptr;
  VectorMapGraph graph;
  std::optional<VectorId> goal_vector;

  static SceneContext Build(const ScenarioLog& log);
};

// Context at log step `step` seen from `frame`. Agents are taken from the
// log; the ego track is never read.
ObservationFrame AssembleObservation(const SceneContext& scene, int step,
                                     const Frame& frame,
                                     const ObservationConfig& config = {});

// FNV-1a digest over every tensor and mask.
uint64_t Digest(const ObservationFrame& obs);

}  // namespace ccil
