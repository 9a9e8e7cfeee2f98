#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ccil/geometry.h"
#include "ccil/mapgraph.h"
#include "ccil/rng.h"

namespace ccil {

enum class AgentType { kVehicle, kPedestrian, kCyclist };

std::string ToString(AgentType type);
AgentType ParseAgentType(const std::string& s);

struct AgentTrack {
  int id = 0;
  AgentType type = AgentType::kVehicle;
  double length = 4.5;
  double width = 2.0;
  std::vector<Pose2> poses;  // one per log step

  OrientedBox BoxAt(size_t step) const { return {poses.at(step), length, width}; }
  bool operator==(const AgentTrack&) const = default;
};

// Recorded scene: ego ground truth, replayed agents, map and mission goal.
// A log with N poses spans N - 1 steps, i.e. (N - 1) / frequency seconds.
struct ScenarioLog {
  std::string name;
  std::string map_path;  // empty when the map is inline
  MapData map;
  double frequency = 10.0;
  double ego_length = 4.5;
  double ego_width = 2.0;
  std::vector<Pose2> ego;
  std::vector<AgentTrack> agents;
  Vec2 goal;

  double dt() const { return 1.0 / frequency; }
  size_t size() const { return ego.size(); }
  double duration() const { return (ego.size() - 1) * dt(); }
  Trajectory EgoTrajectory() const { return Trajectory(ego, dt()); }
  OrientedBox EgoBox(const Pose2& pose) const { return {pose, ego_length, ego_width}; }
  // Throws std::invalid_argument on inconsistent tracks.
  void Validate() const;
  bool operator==(const ScenarioLog&) const = default;
};

// JSON-lines scenario files, one scene per line. With `inline_map` false and
// a non-empty map_path only the path is written.
std::string ScenarioToJsonLine(const ScenarioLog& log, bool inline_map = true);
// Relative map paths are resolved against `base_dir`.
ScenarioLog ScenarioFromJsonLine(const std::string& line,
                                 const std::string& base_dir = "");
std::vector<ScenarioLog> LoadScenarios(const std::string& path);
void SaveScenarios(const std::vector<ScenarioLog>& logs, const std::string& path,
                   bool inline_map = true);

constexpr double kToySpeed = 1.0;      // m/s
constexpr double kToyFrequency = 1.0;  // Hz
constexpr double kToyMinRadius = 10.0;
constexpr double kToyMaxRadius = 100.0;

// Counter-clockwise motion at 1 m/s, 1 Hz on a ring of the given radius,
// starting at a uniform random angle. `steps` transitions, steps + 1 poses.
// The goal is the ring centre. Throws unless 10 <= radius <= 100.
ScenarioLog MakeRingScenario(double radius, int steps, Rng& rng);
// Same with an explicit start angle.
ScenarioLog MakeRingScenarioAt(double radius, int steps, double start_angle);

enum class SyntheticMapKind { kCorridor, kIntersection };

std::string ToString(SyntheticMapKind kind);
SyntheticMapKind ParseSyntheticMapKind(const std::string& s);
MapData MakeSyntheticMap(SyntheticMapKind kind);

struct SyntheticSceneOptions {
  double duration = 25.0;  // seconds
  double frequency = 10.0;
  double min_speed = 4.0;
  double max_speed = 10.0;
  int max_agents = 6;
};

// Ego follows a random route on the map at a smoothly varying speed and
// agents drive other routes; the goal is the end of the ego route.
ScenarioLog MakeSyntheticScenario(const MapData& map, const std::string& map_path,
                                  const SyntheticSceneOptions& options, Rng& rng);

// Poses sampled at arc length `s` along `path` with tangent headings.
Pose2 PoseAlongPath(const std::vector<Vec2>& path, double s);
double PathLength(const std::vector<Vec2>& path);

}  // namespace ccil
