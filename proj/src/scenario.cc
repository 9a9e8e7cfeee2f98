#include "ccil/scenario.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace ccil {

using nlohmann::json;

std::string ToString(AgentType type) {
  switch (type) {
    case AgentType::kVehicle: return "vehicle";
    case AgentType::kPedestrian: return "pedestrian";
    case AgentType::kCyclist: return "cyclist";
  }
  return "vehicle";
}

AgentType ParseAgentType(const std::string& s) {
  if (s == "vehicle") return AgentType::kVehicle;
  if (s == "pedestrian") return AgentType::kPedestrian;
  if (s == "cyclist") return AgentType::kCyclist;
  throw std::invalid_argument("unknown agent type '" + s + "'");
}

void ScenarioLog::Validate() const {
  if (!(frequency > 0.0) || !std::isfinite(frequency)) {
    throw std::invalid_argument("scenario frequency must be positive");
  }
  if (ego.size() < 2) throw std::invalid_argument("scenario needs >= 2 ego poses");
  if (!(ego_length > 0.0 && ego_width > 0.0)) {
    throw std::invalid_argument("ego extents must be positive");
  }
  for (const auto& a : agents) {
    if (a.poses.size() != ego.size()) {
      throw std::invalid_argument("agent " + std::to_string(a.id) +
                                  " does not share the ego time base");
    }
    if (!(a.length > 0.0 && a.width > 0.0)) {
      throw std::invalid_argument("agent extents must be positive");
    }
  }
}

namespace {

json PosesToJson(const std::vector<Pose2>& poses) {
  json arr = json::array();
  for (const auto& p : poses) arr.push_back({p.x, p.y, p.heading});
  return arr;
}

std::vector<Pose2> PosesFromJson(const json& arr) {
  std::vector<Pose2> poses;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 3) {
      throw std::invalid_argument("pose must be [x, y, heading]");
    }
    poses.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return poses;
}

void CheckKeys(const json& obj, std::initializer_list<const char*> keys,
               const char* what) {
  for (const auto& [k, _] : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(),
                     [&](const char* key) { return k == key; })) {
      throw std::invalid_argument("unknown key '" + k + "' in " + what);
    }
  }
}

}  // namespace

std::string ScenarioToJsonLine(const ScenarioLog& log, bool inline_map) {
  json j;
  j["name"] = log.name;
  if (!log.map_path.empty()) j["map_path"] = log.map_path;
  if (inline_map || log.map_path.empty()) j["map"] = json::parse(MapToJson(log.map));
  j["frequency"] = log.frequency;
  j["ego"] = {{"length", log.ego_length},
              {"width", log.ego_width},
              {"poses", PosesToJson(log.ego)}};
  json agents = json::array();
  for (const auto& a : log.agents) {
    agents.push_back({{"id", a.id},
                      {"type", ToString(a.type)},
                      {"length", a.length},
                      {"width", a.width},
                      {"poses", PosesToJson(a.poses)}});
  }
  j["agents"] = agents;
  j["goal"] = {log.goal.x, log.goal.y};
  return j.dump();
}

namespace {

ScenarioLog ParseScenarioLine(const std::string& line, const std::string& base_dir) {
  const json j = json::parse(line);
  CheckKeys(j, {"name", "map_path", "map", "frequency", "ego", "agents", "goal"},
            "scenario");
  ScenarioLog log;
  log.name = j.value("name", "");
  log.map_path = j.value("map_path", "");
  if (j.contains("map")) {
    log.map = ParseMapJson(j.at("map").dump());
  } else if (!log.map_path.empty()) {
    std::filesystem::path p(log.map_path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    log.map = LoadMapFile(p.string());
  } else {
    throw std::invalid_argument("scenario has neither map nor map_path");
  }
  log.frequency = j.at("frequency").get<double>();
  const json& ego = j.at("ego");
  CheckKeys(ego, {"length", "width", "poses"}, "ego");
  log.ego_length = ego.at("length").get<double>();
  log.ego_width = ego.at("width").get<double>();
  log.ego = PosesFromJson(ego.at("poses"));
  for (const auto& a : j.value("agents", json::array())) {
    CheckKeys(a, {"id", "type", "length", "width", "poses"}, "agent");
    AgentTrack t;
    t.id = a.at("id").get<int>();
    t.type = ParseAgentType(a.at("type").get<std::string>());
    t.length = a.at("length").get<double>();
    t.width = a.at("width").get<double>();
    t.poses = PosesFromJson(a.at("poses"));
    log.agents.push_back(std::move(t));
  }
  const json& g = j.at("goal");
  log.goal = {g.at(0).get<double>(), g.at(1).get<double>()};
  log.Validate();
  return log;
}

}  // namespace

ScenarioLog ScenarioFromJsonLine(const std::string& line,
                                 const std::string& base_dir) {
  try {
    return ParseScenarioLine(line, base_dir);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
}

std::vector<ScenarioLog> LoadScenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  const std::string base = std::filesystem::path(path).parent_path().string();
  std::vector<ScenarioLog> logs;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    logs.push_back(ScenarioFromJsonLine(line, base));
  }
  return logs;
}

void SaveScenarios(const std::vector<ScenarioLog>& logs, const std::string& path,
                   bool inline_map) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& log : logs) out << ScenarioToJsonLine(log, inline_map) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

ScenarioLog MakeRingScenarioAt(double radius, int steps, double start_angle) {
  if (!(radius >= kToyMinRadius && radius <= kToyMaxRadius)) {
    throw std::invalid_argument("ring radius must lie in [10, 100] m");
  }
  if (steps < 1) throw std::invalid_argument("ring scenario needs >= 1 step");
  ScenarioLog log;
  log.name = "ring";
  log.map = synthetic::RingMap(radius, 1.0);
  log.frequency = kToyFrequency;
  const double dtheta = kToySpeed / (kToyFrequency * radius);
  for (int k = 0; k <= steps; ++k) {
    const double a = start_angle + k * dtheta;
    log.ego.emplace_back(radius * std::cos(a), radius * std::sin(a),
                         a + 0.5 * kPi);
  }
  log.goal = {0.0, 0.0};
  return log;
}

ScenarioLog MakeRingScenario(double radius, int steps, Rng& rng) {
  return MakeRingScenarioAt(radius, steps, rng.Uniform(0.0, 2.0 * kPi));
}

std::string ToString(SyntheticMapKind kind) {
  return kind == SyntheticMapKind::kCorridor ? "corridor" : "intersection";
}

SyntheticMapKind ParseSyntheticMapKind(const std::string& s) {
  if (s == "corridor") return SyntheticMapKind::kCorridor;
  if (s == "intersection") return SyntheticMapKind::kIntersection;
  throw std::invalid_argument("unknown map kind '" + s + "'");
}

MapData MakeSyntheticMap(SyntheticMapKind kind) {
  return kind == SyntheticMapKind::kCorridor ? synthetic::CorridorMap()
                                             : synthetic::IntersectionMap();
}

double PathLength(const std::vector<Vec2>& path) {
  double len = 0.0;
  for (size_t i = 1; i < path.size(); ++i) len += Distance(path[i - 1], path[i]);
  return len;
}

Pose2 PoseAlongPath(const std::vector<Vec2>& path, double s) {
  if (path.size() < 2) throw std::invalid_argument("path needs >= 2 points");
  double acc = 0.0;
  for (size_t i = 1; i < path.size(); ++i) {
    const Vec2 seg = path[i] - path[i - 1];
    const double len = seg.Norm();
    if (len <= 0.0) continue;
    if (acc + len >= s || i + 1 == path.size()) {
      const double u = std::clamp((s - acc) / len, 0.0, 1.0);
      const Vec2 p = path[i - 1] + seg * u;
      return {p.x, p.y, std::atan2(seg.y, seg.x)};
    }
    acc += len;
  }
  const Vec2 d = path.back() - path.front();
  return {path.back().x, path.back().y, std::atan2(d.y, d.x)};
}

namespace {

// Routes start at polylines nobody leads into and follow random successors.
std::vector<Vec2> RandomRoute(const MapData& map, Rng& rng, int start_index = -1) {
  std::map<int, const PolylineSpec*> by_id;
  std::map<int, int> indegree;
  for (const auto& p : map.polylines) {
    by_id[p.id] = &p;
    indegree.try_emplace(p.id, 0);
  }
  for (const auto& p : map.polylines) {
    for (int n : p.next) {
      if (n != p.id) ++indegree[n];
    }
  }
  std::vector<const PolylineSpec*> starts;
  for (const auto& p : map.polylines) {
    if (indegree[p.id] == 0) starts.push_back(&p);
  }
  if (starts.empty()) {
    for (const auto& p : map.polylines) starts.push_back(&p);
  }
  if (starts.empty()) throw std::invalid_argument("map has no polylines");
  const PolylineSpec* cur =
      start_index >= 0 ? starts[start_index % starts.size()]
                       : starts[rng.UniformInt(starts.size())];
  std::vector<Vec2> route = cur->points;
  for (int hops = 0; hops < 8; ++hops) {
    std::vector<int> options;
    for (int n : cur->next) {
      if (n != cur->id && by_id.count(n)) options.push_back(n);
    }
    if (options.empty()) break;
    cur = by_id[options[rng.UniformInt(options.size())]];
    for (size_t i = 0; i < cur->points.size(); ++i) {
      if (i == 0 && Distance(cur->points[0], route.back()) < 1e-9) continue;
      route.push_back(cur->points[i]);
    }
  }
  return route;
}

std::vector<Pose2> DriveRoute(const std::vector<Vec2>& route, int n, double dt,
                              double start_s, double speed, double phase) {
  const double length = PathLength(route);
  std::vector<Pose2> poses;
  double s = start_s;
  for (int k = 0; k < n; ++k) {
    const Pose2 p = PoseAlongPath(route, std::min(s, length));
    poses.push_back(p);
    const double t = k * dt;
    const double v = speed * (1.0 + 0.15 * std::sin(0.4 * t + phase));
    s += v * dt;
  }
  return poses;
}

}  // namespace

ScenarioLog MakeSyntheticScenario(const MapData& map, const std::string& map_path,
                                  const SyntheticSceneOptions& options, Rng& rng) {
  if (!(options.duration > 0.0 && options.frequency > 0.0)) {
    throw std::invalid_argument("scene duration and frequency must be positive");
  }
  ScenarioLog log;
  log.name = "synthetic";
  log.map = map;
  log.map_path = map_path;
  log.frequency = options.frequency;
  const int n = static_cast<int>(std::lround(options.duration * options.frequency)) + 1;
  const double dt = 1.0 / options.frequency;

  const std::vector<Vec2> route = RandomRoute(map, rng);
  const double length = PathLength(route);
  // Keep 1.15 * speed * duration within the route so the ego never stalls.
  const double fit = 0.8 * (length - 1.0) / (1.15 * options.duration);
  const double speed =
      std::min(rng.Uniform(options.min_speed, options.max_speed), fit);
  log.ego = DriveRoute(route, n, dt, 0.0, speed, rng.Uniform(0.0, 2.0 * kPi));
  log.goal = route.back();

  // Agents whose recorded track would touch the ego are redrawn; logs are
  // collision free by construction.
  auto clashes = [&](const AgentTrack& a) {
    for (int k = 0; k < n; ++k) {
      const OrientedBox ego(log.ego[k], log.ego_length + 1.0, log.ego_width + 1.0);
      if (ObbIntersects(ego, a.BoxAt(k))) return true;
    }
    return false;
  };
  const int agents = static_cast<int>(rng.UniformInt(options.max_agents + 1));
  for (int i = 0; i < agents; ++i) {
    for (int attempt = 0; attempt < 10; ++attempt) {
      AgentTrack a;
      a.id = 1000 + i;
      const double u = rng.Uniform();
      a.type = u < 0.8 ? AgentType::kVehicle
                       : (u < 0.9 ? AgentType::kCyclist : AgentType::kPedestrian);
      a.length = a.type == AgentType::kVehicle ? 4.5 : (a.type == AgentType::kCyclist ? 1.8 : 0.6);
      a.width = a.type == AgentType::kVehicle ? 2.0 : 0.6;
      const std::vector<Vec2> r = RandomRoute(map, rng);
      const double len = PathLength(r);
      const double start = rng.Uniform(0.0, 0.5 * len);
      const double v = std::min(rng.Uniform(0.0, options.max_speed),
                                0.8 * std::max(len - start - 1.0, 0.0) /
                                    (1.15 * options.duration));
      a.poses = DriveRoute(r, n, dt, start, v, rng.Uniform(0.0, 2.0 * kPi));
      if (clashes(a)) continue;
      log.agents.push_back(std::move(a));
      break;
    }
  }
  log.Validate();
  return log;
}

}  // namespace ccil
