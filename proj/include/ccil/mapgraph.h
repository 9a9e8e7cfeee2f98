#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccil/geometry.h"

namespace ccil {

enum class TrafficLight { kNone, kRed, kGreen };

// Declaration order is selection priority when too many polygons are in range.
enum class PolygonType { kStopLine, kCrosswalk, kIntersection, kWalkway, kCarPark };

constexpr double kPolylineVectorInterval = 3.0;
constexpr int kPolygonVectorCount = 20;

// Raw map element as stored in a map file. `left`/`right` list the polylines
// a vehicle may legally move into from this one, `next` the successors.
struct PolylineSpec {
  int id = 0;
  std::vector<Vec2> points;
  std::optional<double> lane_width;
  TrafficLight traffic_light = TrafficLight::kNone;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<int> next;

  bool operator==(const PolylineSpec&) const = default;
};

struct PolygonSpec {
  int id = 0;
  PolygonType type = PolygonType::kCrosswalk;
  std::vector<Vec2> points;

  bool operator==(const PolygonSpec&) const = default;
};

struct MapData {
  std::vector<PolylineSpec> polylines;
  std::vector<PolygonSpec> polygons;

  bool operator==(const MapData&) const = default;
};

using VectorId = int;

struct MapVector {
  Vec2 start;
  Vec2 end;
  int polyline_id = -1;
  int sequence_order = 0;
  std::optional<VectorId> left_neighbor;
  std::optional<VectorId> right_neighbor;
  std::optional<VectorId> next;
  std::optional<double> lane_width;
  TrafficLight traffic_light = TrafficLight::kNone;
  // Filled by neighbourhood queries; empty when the goal is unreachable.
  std::optional<double> dist_to_goal;

  double Length() const { return Distance(start, end); }
};

// Resamples `points` by arc length into ceil(length / interval) vectors; the
// last one may be shorter. Throws on fewer than two points, a non-positive
// interval or zero total length.
std::vector<MapVector> VectorizePolyline(std::span<const Vec2> points,
                                         double interval);

// Closed boundary resampled into `count` equal-arc-length vectors.
std::vector<MapVector> VectorizePolygon(std::span<const Vec2> boundary,
                                        int count = kPolygonVectorCount);

struct MapPolygon {
  int id = 0;
  PolygonType type = PolygonType::kCrosswalk;
  std::vector<Vec2> boundary;
  std::vector<MapVector> vectors;

  double DistanceTo(const Vec2& p) const;
};

enum class EdgeKind { kNext, kLeft, kRight };

struct GraphEdge {
  VectorId to = 0;
  double weight = 0.0;
  EdgeKind kind = EdgeKind::kNext;
};

struct VectorizedPolyline {
  PolylineSpec spec;
  std::vector<MapVector> vectors;
};

class VectorMapGraph {
 public:
  VectorMapGraph() = default;

  // Vectorizes and connects every polyline. Polygons carry no edges.
  static VectorMapGraph Build(const MapData& map,
                              double interval = kPolylineVectorInterval);
  static VectorMapGraph Build(std::vector<VectorizedPolyline> polylines,
                              std::span<const PolygonSpec> polygons);

  const std::vector<MapVector>& vectors() const { return vectors_; }
  const std::vector<MapPolygon>& polygons() const { return polygons_; }
  const std::vector<int>& polyline_ids() const { return polyline_ids_; }
  const std::vector<GraphEdge>& Edges(VectorId v) const;
  // Vector ids of a polyline in sequence order.
  const std::vector<VectorId>& PolylineVectors(int polyline_id) const;
  size_t EdgeCount() const;
  bool empty() const { return vectors_.empty(); }

  // Shortest path over directed adjacency edges. Empty when unreachable;
  // throws std::out_of_range on an unknown id.
  std::optional<double> TravelDistance(VectorId from, VectorId to) const;
  // Single-source distances from `source` (infinity when unreachable).
  std::vector<double> DistancesFrom(VectorId source) const;
  // Distances from every vector to `target` along directed edges.
  std::vector<double> DistancesTo(VectorId target) const;

  // Vector whose start point is closest to `p`; empty for an empty graph.
  std::optional<VectorId> NearestVector(const Vec2& p) const;

 private:
  std::vector<double> Dijkstra(
      VectorId source, const std::vector<std::vector<GraphEdge>>& adj) const;
  void CheckId(VectorId v) const;

  std::vector<MapVector> vectors_;
  std::vector<std::vector<GraphEdge>> adjacency_;
  std::vector<std::vector<GraphEdge>> reverse_adjacency_;
  std::vector<int> polyline_ids_;
  std::vector<std::vector<VectorId>> polyline_members_;
  std::vector<MapPolygon> polygons_;
};

struct NeighborhoodLimits {
  double polyline_radius = 35.0;
  int max_polylines = 30;
  double polygon_radius = 35.0;
  int max_polygons = 20;
};

struct SelectedPolyline {
  int polyline_id = 0;
  // Member vectors whose start lies inside the radius, in sequence order,
  // with dist_to_goal filled.
  std::vector<MapVector> vectors;
  double topological_distance = 0.0;
};

struct SelectedPolygon {
  const MapPolygon* polygon = nullptr;
  double boundary_distance = 0.0;
};

struct Neighborhood {
  std::vector<SelectedPolyline> polylines;
  std::vector<SelectedPolygon> polygons;
};

// Polylines are ranked by topological distance: the minimum over in-range
// member vectors of the travel distance (either direction) to the vector
// nearest `origin`; ties and unreachable polylines fall back to id order.
// Polygons are ranked by type priority, then boundary distance, then id.
Neighborhood QueryNeighborhood(const VectorMapGraph& graph, const Vec2& origin,
                               std::optional<VectorId> goal_vector,
                               const NeighborhoodLimits& limits = {});

// Map file I/O (JSON). Saving a loaded document reproduces it byte for byte
// when it was itself produced by SaveMapJson.
MapData ParseMapJson(const std::string& text);
std::string MapToJson(const MapData& map);
MapData LoadMapFile(const std::string& path);
void SaveMapFile(const MapData& map, const std::string& path);

std::string ToString(TrafficLight tl);
std::string ToString(PolygonType type);
TrafficLight ParseTrafficLight(const std::string& s);
PolygonType ParsePolygonType(const std::string& s);

// Synthetic maps.
namespace synthetic {

// Counter-clockwise ring lane centred at the origin; the polyline is its own
// successor.
MapData RingMap(double radius, double point_spacing = 1.0);

// Straight two-lane corridor along +x, lanes mutually reachable, with a
// crosswalk and walkways.
MapData CorridorMap(double length = 200.0, double lane_width = 3.5);

// Four-way intersection with inbound, outbound and connector lanes plus stop
// lines, crosswalks and the junction polygon.
MapData IntersectionMap(double arm_length = 60.0, double lane_width = 3.5);

}  // namespace synthetic

}  // namespace ccil
