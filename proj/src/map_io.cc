#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ccil/mapgraph.h"
#include "json.hpp"

namespace ccil {

using nlohmann::json;

std::string ToString(TrafficLight tl) {
  switch (tl) {
    case TrafficLight::kNone: return "none";
    case TrafficLight::kRed: return "red";
    case TrafficLight::kGreen: return "green";
  }
  return "none";
}

std::string ToString(PolygonType type) {
  switch (type) {
    case PolygonType::kStopLine: return "stop_line";
    case PolygonType::kCrosswalk: return "crosswalk";
    case PolygonType::kIntersection: return "intersection";
    case PolygonType::kWalkway: return "walkway";
    case PolygonType::kCarPark: return "car_park";
  }
  return "crosswalk";
}

TrafficLight ParseTrafficLight(const std::string& s) {
  if (s == "none") return TrafficLight::kNone;
  if (s == "red") return TrafficLight::kRed;
  if (s == "green") return TrafficLight::kGreen;
  throw std::invalid_argument("unknown traffic_light '" + s + "'");
}

PolygonType ParsePolygonType(const std::string& s) {
  if (s == "stop_line") return PolygonType::kStopLine;
  if (s == "crosswalk") return PolygonType::kCrosswalk;
  if (s == "intersection") return PolygonType::kIntersection;
  if (s == "walkway") return PolygonType::kWalkway;
  if (s == "car_park") return PolygonType::kCarPark;
  throw std::invalid_argument("unknown polygon type '" + s + "'");
}

namespace {

json PointsToJson(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Vec2> PointsFromJson(const json& arr) {
  std::vector<Vec2> pts;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) {
      throw std::invalid_argument("map point must be [x, y]");
    }
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return pts;
}

void RejectUnknownKeys(const json& obj, std::initializer_list<const char*> keys,
                       const char* what) {
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* key : keys) known = known || k == key;
    if (!known) {
      throw std::invalid_argument(std::string("unknown key '") + k + "' in " +
                                  what);
    }
  }
}

}  // namespace

namespace {

MapData ParseMapDocument(const std::string& text) {
  const json doc = json::parse(text);
  RejectUnknownKeys(doc, {"polylines", "polygons"}, "map");
  MapData map;
  for (const auto& j : doc.value("polylines", json::array())) {
    RejectUnknownKeys(
        j, {"id", "points", "lane_width", "traffic_light", "left", "right", "next"},
        "polyline");
    PolylineSpec p;
    p.id = j.at("id").get<int>();
    p.points = PointsFromJson(j.at("points"));
    if (j.contains("lane_width")) p.lane_width = j["lane_width"].get<double>();
    p.traffic_light = ParseTrafficLight(j.value("traffic_light", "none"));
    p.left = j.value("left", std::vector<int>{});
    p.right = j.value("right", std::vector<int>{});
    p.next = j.value("next", std::vector<int>{});
    map.polylines.push_back(std::move(p));
  }
  for (const auto& j : doc.value("polygons", json::array())) {
    RejectUnknownKeys(j, {"id", "type", "points"}, "polygon");
    PolygonSpec p;
    p.id = j.at("id").get<int>();
    p.type = ParsePolygonType(j.at("type").get<std::string>());
    p.points = PointsFromJson(j.at("points"));
    map.polygons.push_back(std::move(p));
  }
  return map;
}

}  // namespace

MapData ParseMapJson(const std::string& text) {
  try {
    return ParseMapDocument(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("map: ") + e.what());
  }
}

std::string MapToJson(const MapData& map) {
  json doc;
  doc["polylines"] = json::array();
  for (const auto& p : map.polylines) {
    json j;
    j["id"] = p.id;
    j["points"] = PointsToJson(p.points);
    if (p.lane_width) j["lane_width"] = *p.lane_width;
    j["traffic_light"] = ToString(p.traffic_light);
    j["left"] = p.left;
    j["right"] = p.right;
    j["next"] = p.next;
    doc["polylines"].push_back(std::move(j));
  }
  doc["polygons"] = json::array();
  for (const auto& p : map.polygons) {
    json j;
    j["id"] = p.id;
    j["type"] = ToString(p.type);
    j["points"] = PointsToJson(p.points);
    doc["polygons"].push_back(std::move(j));
  }
  return doc.dump(1) + "\n";
}

MapData LoadMapFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open map file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseMapJson(ss.str());
}

void SaveMapFile(const MapData& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write map file " + path);
  out << MapToJson(map);
}

}  // namespace ccil
