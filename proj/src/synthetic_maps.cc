#include <array>
#include <cmath>

#include "ccil/mapgraph.h"

namespace ccil::synthetic {
namespace {

std::vector<Vec2> Rectangle(const Vec2& center, const Vec2& axis, double along,
                            double across) {
  const Vec2 n{-axis.y, axis.x};
  const Vec2 a = axis * (0.5 * along);
  const Vec2 b = n * (0.5 * across);
  return {center + a + b, center - a + b, center - a - b, center + a - b};
}

std::vector<Vec2> QuadraticBezier(const Vec2& p0, const Vec2& p1,
                                  const Vec2& p2, int samples) {
  std::vector<Vec2> pts;
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const double u = 1.0 - t;
    pts.push_back(p0 * (u * u) + p1 * (2.0 * u * t) + p2 * (t * t));
  }
  return pts;
}

}  // namespace

MapData RingMap(double radius, double point_spacing) {
  MapData map;
  PolylineSpec lane;
  lane.id = 1;
  const int n = std::max(
      8, static_cast<int>(std::lround(2.0 * kPi * radius / point_spacing)));
  for (int i = 0; i <= n; ++i) {
    const double a = 2.0 * kPi * (i % n) / n;
    lane.points.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  lane.lane_width = 3.5;
  lane.next = {1};
  map.polylines.push_back(std::move(lane));
  return map;
}

MapData CorridorMap(double length, double lane_width) {
  MapData map;
  PolylineSpec right_lane;
  right_lane.id = 1;
  right_lane.points = {{0.0, 0.0}, {length, 0.0}};
  right_lane.lane_width = lane_width;
  right_lane.left = {2};
  PolylineSpec left_lane;
  left_lane.id = 2;
  left_lane.points = {{0.0, lane_width}, {length, lane_width}};
  left_lane.lane_width = lane_width;
  left_lane.right = {1};
  map.polylines = {right_lane, left_lane};

  const Vec2 ex{1.0, 0.0};
  const double mid_y = 0.5 * lane_width;
  const double road = 2.0 * lane_width;
  map.polygons.push_back(
      {10, PolygonType::kCrosswalk,
       Rectangle({0.5 * length, mid_y}, ex, 4.0, road + 2.0)});
  map.polygons.push_back(
      {11, PolygonType::kStopLine,
       Rectangle({0.5 * length - 3.0, 0.0}, ex, 0.5, lane_width)});
  map.polygons.push_back(
      {12, PolygonType::kWalkway,
       Rectangle({0.5 * length, -0.5 * lane_width - 1.5}, ex, length, 3.0)});
  map.polygons.push_back(
      {13, PolygonType::kWalkway,
       Rectangle({0.5 * length, 1.5 * lane_width + 1.5}, ex, length, 3.0)});
  return map;
}

MapData IntersectionMap(double arm_length, double lane_width) {
  MapData map;
  const double box = 2.0 * lane_width;
  const double half = 0.5 * lane_width;
  const std::array<Vec2, 4> dirs = {
      Vec2{1.0, 0.0}, Vec2{0.0, 1.0}, Vec2{-1.0, 0.0}, Vec2{0.0, -1.0}};

  auto inbound_id = [](int i) { return 10 + i; };
  auto outbound_id = [](int i) { return 20 + i; };
  auto connector_id = [](int i, int j) { return 100 + 10 * i + j; };

  for (int i = 0; i < 4; ++i) {
    const Vec2 u = dirs[i];
    const Vec2 n{-u.y, u.x};
    PolylineSpec in;
    in.id = inbound_id(i);
    in.points = {u * (box + arm_length) + n * half, u * box + n * half};
    in.lane_width = lane_width;
    in.traffic_light = i % 2 == 0 ? TrafficLight::kGreen : TrafficLight::kRed;
    for (int j = 0; j < 4; ++j) {
      if (j != i) in.next.push_back(connector_id(i, j));
    }
    PolylineSpec out;
    out.id = outbound_id(i);
    out.points = {u * box - n * half, u * (box + arm_length) - n * half};
    out.lane_width = lane_width;
    map.polylines.push_back(std::move(in));
    map.polylines.push_back(std::move(out));
  }
  for (int i = 0; i < 4; ++i) {
    const Vec2 ui = dirs[i];
    const Vec2 ni{-ui.y, ui.x};
    const Vec2 p0 = ui * box + ni * half;
    const Vec2 t0 = ui * -1.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      const Vec2 uj = dirs[j];
      const Vec2 nj{-uj.y, uj.x};
      const Vec2 p2 = uj * box - nj * half;
      // Control point at the intersection of the entry and exit tangents.
      Vec2 control = (p0 + p2) * 0.5;
      const double denom = t0.Cross(uj);
      if (std::abs(denom) > 1e-9) {
        const double s = (p2 - p0).Cross(uj) / denom;
        control = p0 + t0 * s;
      }
      PolylineSpec c;
      c.id = connector_id(i, j);
      c.points = QuadraticBezier(p0, control, p2, 16);
      c.lane_width = lane_width;
      c.next = {outbound_id(j)};
      map.polylines.push_back(std::move(c));
    }
  }

  int pid = 200;
  map.polygons.push_back(
      {pid++, PolygonType::kIntersection,
       {{box, box}, {-box, box}, {-box, -box}, {box, -box}}});
  for (int i = 0; i < 4; ++i) {
    const Vec2 u = dirs[i];
    const Vec2 n{-u.y, u.x};
    map.polygons.push_back({pid++, PolygonType::kCrosswalk,
                            Rectangle(u * (box + 2.5), n, 2.0 * box + 2.0, 3.0)});
    map.polygons.push_back({pid++, PolygonType::kStopLine,
                            Rectangle(u * (box + 4.5) + n * half, n,
                                      lane_width, 0.5)});
    const Vec2 corner = (u + n) * (box + 4.0);
    map.polygons.push_back(
        {pid++, PolygonType::kWalkway, Rectangle(corner, u, 4.0, 4.0)});
  }
  map.polygons.push_back({pid++, PolygonType::kCarPark,
                          Rectangle({box + 20.0, box + 20.0}, dirs[0], 15.0,
                                    10.0)});
  return map;
}

}  // namespace ccil::synthetic
