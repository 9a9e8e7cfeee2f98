#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include "ccil/mapgraph.h"

namespace ccil {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> CumulativeArcLength(std::span<const Vec2> points) {
  std::vector<double> s(points.size(), 0.0);
  for (size_t i = 1; i < points.size(); ++i) {
    s[i] = s[i - 1] + Distance(points[i - 1], points[i]);
  }
  return s;
}

Vec2 PointAtArc(std::span<const Vec2> points, const std::vector<double>& s,
                double arc) {
  if (arc <= 0.0) return points.front();
  if (arc >= s.back()) return points.back();
  const auto it = std::upper_bound(s.begin(), s.end(), arc);
  const size_t i = static_cast<size_t>(it - s.begin());  // s[i-1] <= arc < s[i]
  const double seg = s[i] - s[i - 1];
  const double f = seg > 0.0 ? (arc - s[i - 1]) / seg : 0.0;
  return points[i - 1] + (points[i] - points[i - 1]) * f;
}

bool PointInPolygon(const Vec2& p, std::span<const Vec2> poly) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

}  // namespace

std::vector<MapVector> VectorizePolyline(std::span<const Vec2> points,
                                         double interval) {
  if (points.size() < 2) {
    throw std::invalid_argument("VectorizePolyline: need at least two points");
  }
  if (!(interval > 0.0)) {
    throw std::invalid_argument("VectorizePolyline: interval must be > 0");
  }
  const std::vector<double> s = CumulativeArcLength(points);
  const double total = s.back();
  if (!(total > 0.0)) {
    throw std::invalid_argument("VectorizePolyline: zero-length polyline");
  }
  const int count =
      std::max(1, static_cast<int>(std::ceil(total / interval - 1e-9)));
  std::vector<MapVector> out(count);
  for (int k = 0; k < count; ++k) {
    out[k].start = PointAtArc(points, s, k * interval);
    out[k].end = k + 1 == count ? points.back()
                                : PointAtArc(points, s, (k + 1) * interval);
    out[k].sequence_order = k;
  }
  return out;
}

std::vector<MapVector> VectorizePolygon(std::span<const Vec2> boundary,
                                        int count) {
  if (boundary.size() < 3) {
    throw std::invalid_argument("VectorizePolygon: need at least 3 points");
  }
  std::vector<Vec2> closed(boundary.begin(), boundary.end());
  if (!(closed.front() == closed.back())) closed.push_back(closed.front());
  const std::vector<double> s = CumulativeArcLength(closed);
  const double perimeter = s.back();
  if (!(perimeter > 0.0)) {
    throw std::invalid_argument("VectorizePolygon: degenerate polygon");
  }
  std::vector<MapVector> out(count);
  const double step = perimeter / count;
  for (int k = 0; k < count; ++k) {
    out[k].start = PointAtArc(closed, s, k * step);
    out[k].end =
        k + 1 == count ? closed.front() : PointAtArc(closed, s, (k + 1) * step);
    out[k].sequence_order = k;
  }
  return out;
}

double MapPolygon::DistanceTo(const Vec2& p) const {
  if (PointInPolygon(p, boundary)) return 0.0;
  std::vector<Vec2> closed = boundary;
  closed.push_back(boundary.front());
  return PointToPolylineDistance(p, closed);
}

VectorMapGraph VectorMapGraph::Build(const MapData& map, double interval) {
  std::vector<VectorizedPolyline> polylines;
  polylines.reserve(map.polylines.size());
  for (const auto& spec : map.polylines) {
    polylines.push_back({spec, VectorizePolyline(spec.points, interval)});
  }
  return Build(std::move(polylines), map.polygons);
}

VectorMapGraph VectorMapGraph::Build(std::vector<VectorizedPolyline> polylines,
                                     std::span<const PolygonSpec> polygons) {
  VectorMapGraph g;
  std::unordered_map<int, size_t> index_of;
  for (auto& pl : polylines) {
    if (!index_of.emplace(pl.spec.id, g.polyline_ids_.size()).second) {
      throw std::invalid_argument("duplicate polyline id " +
                                  std::to_string(pl.spec.id));
    }
    g.polyline_ids_.push_back(pl.spec.id);
    std::vector<VectorId> members;
    for (size_t k = 0; k < pl.vectors.size(); ++k) {
      MapVector v = pl.vectors[k];
      v.polyline_id = pl.spec.id;
      v.sequence_order = static_cast<int>(k);
      v.lane_width = pl.spec.lane_width;
      v.traffic_light = pl.spec.traffic_light;
      v.left_neighbor.reset();
      v.right_neighbor.reset();
      v.next.reset();
      members.push_back(static_cast<VectorId>(g.vectors_.size()));
      g.vectors_.push_back(v);
    }
    g.polyline_members_.push_back(std::move(members));
  }
  g.adjacency_.assign(g.vectors_.size(), {});

  auto members_of = [&](int polyline_id) -> const std::vector<VectorId>& {
    const auto it = index_of.find(polyline_id);
    if (it == index_of.end()) {
      throw std::invalid_argument("reference to unknown polyline " +
                                  std::to_string(polyline_id));
    }
    return g.polyline_members_[it->second];
  };
  auto add_edge = [&](VectorId from, VectorId to, EdgeKind kind) {
    const double w = Distance(g.vectors_[from].start, g.vectors_[to].start);
    g.adjacency_[from].push_back({to, w, kind});
  };

  for (size_t p = 0; p < polylines.size(); ++p) {
    const auto& spec = polylines[p].spec;
    const auto& members = g.polyline_members_[p];
    for (size_t k = 0; k + 1 < members.size(); ++k) {
      add_edge(members[k], members[k + 1], EdgeKind::kNext);
      g.vectors_[members[k]].next = members[k + 1];
    }
    if (!members.empty()) {
      for (int succ : spec.next) {
        const auto& succ_members = members_of(succ);
        if (succ_members.empty()) continue;
        add_edge(members.back(), succ_members.front(), EdgeKind::kNext);
        if (!g.vectors_[members.back()].next) {
          g.vectors_[members.back()].next = succ_members.front();
        }
      }
    }
    auto connect_side = [&](const std::vector<int>& sides, EdgeKind kind) {
      for (VectorId v : members) {
        double best = kInf;
        std::optional<VectorId> best_id;
        for (int side : sides) {
          double side_best = kInf;
          std::optional<VectorId> side_id;
          for (VectorId u : members_of(side)) {
            const double d = Distance(g.vectors_[v].start, g.vectors_[u].start);
            if (d < side_best) {
              side_best = d;
              side_id = u;
            }
          }
          if (!side_id) continue;
          add_edge(v, *side_id, kind);
          if (side_best < best) {
            best = side_best;
            best_id = side_id;
          }
        }
        if (kind == EdgeKind::kLeft) {
          g.vectors_[v].left_neighbor = best_id;
        } else {
          g.vectors_[v].right_neighbor = best_id;
        }
      }
    };
    connect_side(spec.left, EdgeKind::kLeft);
    connect_side(spec.right, EdgeKind::kRight);
  }

  g.reverse_adjacency_.assign(g.vectors_.size(), {});
  for (size_t v = 0; v < g.adjacency_.size(); ++v) {
    for (const auto& e : g.adjacency_[v]) {
      g.reverse_adjacency_[e.to].push_back(
          {static_cast<VectorId>(v), e.weight, e.kind});
    }
  }

  for (const auto& spec : polygons) {
    MapPolygon poly;
    poly.id = spec.id;
    poly.type = spec.type;
    poly.boundary = spec.points;
    poly.vectors = VectorizePolygon(spec.points);
    g.polygons_.push_back(std::move(poly));
  }
  return g;
}

const std::vector<GraphEdge>& VectorMapGraph::Edges(VectorId v) const {
  CheckId(v);
  return adjacency_[v];
}

const std::vector<VectorId>& VectorMapGraph::PolylineVectors(
    int polyline_id) const {
  const auto it =
      std::find(polyline_ids_.begin(), polyline_ids_.end(), polyline_id);
  if (it == polyline_ids_.end()) {
    throw std::out_of_range("unknown polyline " + std::to_string(polyline_id));
  }
  return polyline_members_[it - polyline_ids_.begin()];
}

size_t VectorMapGraph::EdgeCount() const {
  size_t n = 0;
  for (const auto& a : adjacency_) n += a.size();
  return n;
}

void VectorMapGraph::CheckId(VectorId v) const {
  if (v < 0 || static_cast<size_t>(v) >= vectors_.size()) {
    throw std::out_of_range("unknown vector id " + std::to_string(v));
  }
}

std::vector<double> VectorMapGraph::Dijkstra(
    VectorId source, const std::vector<std::vector<GraphEdge>>& adj) const {
  CheckId(source);
  std::vector<double> dist(vectors_.size(), kInf);
  using Item = std::pair<double, VectorId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (const auto& e : adj[v]) {
      const double nd = d + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        queue.push({nd, e.to});
      }
    }
  }
  return dist;
}

std::vector<double> VectorMapGraph::DistancesFrom(VectorId source) const {
  return Dijkstra(source, adjacency_);
}

std::vector<double> VectorMapGraph::DistancesTo(VectorId target) const {
  return Dijkstra(target, reverse_adjacency_);
}

std::optional<double> VectorMapGraph::TravelDistance(VectorId from,
                                                     VectorId to) const {
  CheckId(from);
  CheckId(to);
  if (from == to) return 0.0;
  const double d = DistancesFrom(from)[to];
  if (std::isinf(d)) return std::nullopt;
  return d;
}

std::optional<VectorId> VectorMapGraph::NearestVector(const Vec2& p) const {
  std::optional<VectorId> best;
  double best_d = kInf;
  for (size_t v = 0; v < vectors_.size(); ++v) {
    const double d = (vectors_[v].start - p).SquaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<VectorId>(v);
    }
  }
  return best;
}

Neighborhood QueryNeighborhood(const VectorMapGraph& graph, const Vec2& origin,
                               std::optional<VectorId> goal_vector,
                               const NeighborhoodLimits& limits) {
  Neighborhood out;
  const auto& vectors = graph.vectors();
  const double r2 = limits.polyline_radius * limits.polyline_radius;

  std::optional<VectorId> anchor;
  double anchor_d = kInf;
  for (size_t v = 0; v < vectors.size(); ++v) {
    const double d = (vectors[v].start - origin).SquaredNorm();
    if (d <= r2 && d < anchor_d) {
      anchor_d = d;
      anchor = static_cast<VectorId>(v);
    }
  }

  if (anchor) {
    const std::vector<double> forward = graph.DistancesFrom(*anchor);
    const std::vector<double> backward = graph.DistancesTo(*anchor);
    std::vector<double> to_goal;
    if (goal_vector) to_goal = graph.DistancesTo(*goal_vector);

    std::vector<SelectedPolyline> candidates;
    for (int pid : graph.polyline_ids()) {
      SelectedPolyline sel;
      sel.polyline_id = pid;
      sel.topological_distance = kInf;
      for (VectorId v : graph.PolylineVectors(pid)) {
        if ((vectors[v].start - origin).SquaredNorm() > r2) continue;
        MapVector mv = vectors[v];
        if (goal_vector && std::isfinite(to_goal[v])) mv.dist_to_goal = to_goal[v];
        sel.vectors.push_back(mv);
        sel.topological_distance = std::min(
            {sel.topological_distance, forward[v], backward[v]});
      }
      if (!sel.vectors.empty()) candidates.push_back(std::move(sel));
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const SelectedPolyline& a, const SelectedPolyline& b) {
                       if (a.topological_distance != b.topological_distance) {
                         return a.topological_distance < b.topological_distance;
                       }
                       return a.polyline_id < b.polyline_id;
                     });
    if (candidates.size() > static_cast<size_t>(limits.max_polylines)) {
      candidates.resize(limits.max_polylines);
    }
    out.polylines = std::move(candidates);
  }

  for (const auto& poly : graph.polygons()) {
    const double d = poly.DistanceTo(origin);
    if (d <= limits.polygon_radius) out.polygons.push_back({&poly, d});
  }
  std::stable_sort(out.polygons.begin(), out.polygons.end(),
                   [](const SelectedPolygon& a, const SelectedPolygon& b) {
                     if (a.polygon->type != b.polygon->type) {
                       return a.polygon->type < b.polygon->type;
                     }
                     if (a.boundary_distance != b.boundary_distance) {
                       return a.boundary_distance < b.boundary_distance;
                     }
                     return a.polygon->id < b.polygon->id;
                   });
  if (out.polygons.size() > static_cast<size_t>(limits.max_polygons)) {
    out.polygons.resize(limits.max_polygons);
  }
  return out;
}

}  // namespace ccil
