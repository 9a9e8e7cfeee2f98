#include "ccil/geometry.h"

#include <algorithm>
#include <limits>

namespace ccil {

double NormalizeAngle(double angle) {
  double r = std::remainder(angle, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

double UnwrapAngle(double angle, double reference) {
  return reference + NormalizeAngle(angle - reference);
}

Trajectory::Trajectory(std::vector<Pose2> poses, double dt)
    : poses_(std::move(poses)), dt_(dt) {
  if (!(dt_ > 0.0)) throw std::invalid_argument("Trajectory: dt must be > 0");
  if (poses_.empty()) throw std::invalid_argument("Trajectory: empty");
}

std::vector<Vec2> Trajectory::Positions() const {
  std::vector<Vec2> out;
  out.reserve(poses_.size());
  for (const auto& p : poses_) out.push_back(p.Position());
  return out;
}

OrientedBox::OrientedBox(const Pose2& c, double l, double w)
    : center(c), length(l), width(w) {
  if (!(length > 0.0) || !(width > 0.0)) {
    throw std::invalid_argument("OrientedBox: non-positive extent");
  }
}

std::array<Vec2, 4> OrientedBox::Corners() const {
  const Vec2 c = center.Position();
  const Vec2 ax{std::cos(center.heading), std::sin(center.heading)};
  const Vec2 ay{-ax.y, ax.x};
  const Vec2 hx = ax * (0.5 * length);
  const Vec2 hy = ay * (0.5 * width);
  return {c + hx + hy, c - hx + hy, c - hx - hy, c + hx - hy};
}

bool OrientedBox::Contains(const Vec2& p) const {
  const Vec2 ax{std::cos(center.heading), std::sin(center.heading)};
  const Vec2 local = TransformToFrame(p, center.Position(), ax);
  return std::abs(local.x) <= 0.5 * length && std::abs(local.y) <= 0.5 * width;
}

namespace {

void CheckUnitAxis(const Vec2& axis) {
  if (std::abs(axis.Norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("frame x-axis must have unit norm");
  }
}

}  // namespace

Vec2 TransformToFrame(const Vec2& point, const Vec2& frame_origin,
                      const Vec2& frame_x_axis) {
  CheckUnitAxis(frame_x_axis);
  const Vec2 d = point - frame_origin;
  return {d.x * frame_x_axis.x + d.y * frame_x_axis.y,
          -d.x * frame_x_axis.y + d.y * frame_x_axis.x};
}

Vec2 TransformFromFrame(const Vec2& local, const Vec2& frame_origin,
                        const Vec2& frame_x_axis) {
  CheckUnitAxis(frame_x_axis);
  return {frame_origin.x + local.x * frame_x_axis.x - local.y * frame_x_axis.y,
          frame_origin.y + local.x * frame_x_axis.y + local.y * frame_x_axis.x};
}

bool ObbIntersects(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.Corners();
  const auto cb = b.Corners();
  const double ha = a.center.heading;
  const double hb = b.center.heading;
  const std::array<Vec2, 4> axes = {
      Vec2{std::cos(ha), std::sin(ha)}, Vec2{-std::sin(ha), std::cos(ha)},
      Vec2{std::cos(hb), std::sin(hb)}, Vec2{-std::sin(hb), std::cos(hb)}};
  for (const Vec2& axis : axes) {
    double min_a = std::numeric_limits<double>::infinity();
    double max_a = -min_a;
    double min_b = min_a;
    double max_b = -min_a;
    for (int i = 0; i < 4; ++i) {
      const double pa = ca[i].Dot(axis);
      const double pb = cb[i].Dot(axis);
      min_a = std::min(min_a, pa);
      max_a = std::max(max_a, pa);
      min_b = std::min(min_b, pb);
      max_b = std::max(max_b, pb);
    }
    if (max_a < min_b || max_b < min_a) return false;
  }
  return true;
}

std::vector<double> UnwrappedHeadings(std::span<const Pose2> poses) {
  std::vector<double> out;
  out.reserve(poses.size());
  for (const auto& p : poses) {
    out.push_back(out.empty() ? p.heading : UnwrapAngle(p.heading, out.back()));
  }
  return out;
}

std::vector<Derivative> FiniteDifferenceDerivatives(const Trajectory& traj) {
  const size_t n = traj.size();
  if (n < 2) {
    throw std::invalid_argument(
        "FiniteDifferenceDerivatives: need at least two poses");
  }
  const double dt = traj.dt();
  const std::vector<double> h = UnwrappedHeadings(traj.poses());
  std::vector<Vec2> p = traj.Positions();

  std::vector<Derivative> out(n);
  for (size_t i = 0; i < n; ++i) {
    size_t lo = i == 0 ? 0 : i - 1;
    size_t hi = i + 1 == n ? n - 1 : i + 1;
    const double span = static_cast<double>(hi - lo) * dt;
    out[i].velocity = (p[hi] - p[lo]) * (1.0 / span);
    out[i].angular_velocity = (h[hi] - h[lo]) / span;
  }
  if (n >= 3) {
    for (size_t i = 0; i < n; ++i) {
      // Three-point stencil centred on i, clamped to the interior.
      const size_t c = std::clamp<size_t>(i, 1, n - 2);
      const double inv = 1.0 / (dt * dt);
      out[i].acceleration = (p[c + 1] - p[c] * 2.0 + p[c - 1]) * inv;
      out[i].angular_acceleration = (h[c + 1] - 2.0 * h[c] + h[c - 1]) * inv;
    }
  }
  return out;
}

double PointToSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.SquaredNorm();
  if (len2 == 0.0) return Distance(p, a);
  const double s = std::clamp((p - a).Dot(ab) / len2, 0.0, 1.0);
  return Distance(p, a + ab * s);
}

double PointToPolylineDistance(const Vec2& p, std::span<const Vec2> path) {
  if (path.empty()) throw std::invalid_argument("empty polyline");
  if (path.size() == 1) return Distance(p, path[0]);
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    best = std::min(best, PointToSegmentDistance(p, path[i], path[i + 1]));
  }
  return best;
}

}  // namespace ccil
