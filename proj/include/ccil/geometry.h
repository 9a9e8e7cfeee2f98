#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace ccil {

constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  bool operator==(const Vec2&) const = default;

  double Dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double Cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double Norm() const { return std::hypot(x, y); }
  double SquaredNorm() const { return x * x + y * y; }
};

inline double Distance(const Vec2& a, const Vec2& b) { return (a - b).Norm(); }

// Maps any angle into (-pi, pi].
double NormalizeAngle(double angle);

// Returns the angle congruent to `angle` (mod 2pi) closest to `reference`.
double UnwrapAngle(double angle, double reference);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Pose2() = default;
  Pose2(double x_in, double y_in, double heading_in)
      : x(x_in), y(y_in), heading(NormalizeAngle(heading_in)) {}

  Vec2 Position() const { return {x, y}; }
  bool operator==(const Pose2&) const = default;
};

class Trajectory {
 public:
  Trajectory(std::vector<Pose2> poses, double dt);

  const std::vector<Pose2>& poses() const { return poses_; }
  double dt() const { return dt_; }
  size_t size() const { return poses_.size(); }
  const Pose2& operator[](size_t i) const { return poses_[i]; }
  const Pose2& back() const { return poses_.back(); }

  void Append(const Pose2& pose) { poses_.push_back(pose); }
  std::vector<Vec2> Positions() const;

 private:
  std::vector<Pose2> poses_;
  double dt_;
};

struct OrientedBox {
  Pose2 center;
  double length = 0.0;
  double width = 0.0;

  OrientedBox() = default;
  OrientedBox(const Pose2& c, double l, double w);

  // Corners in counter-clockwise order starting at front-left.
  std::array<Vec2, 4> Corners() const;
  bool Contains(const Vec2& p) const;
};

// Coordinates of `point` in the frame with origin `frame_origin` and x-axis
// `frame_x_axis` (y-axis is the x-axis rotated by +90 degrees). The axis must
// be unit length within 1e-9.
Vec2 TransformToFrame(const Vec2& point, const Vec2& frame_origin,
                      const Vec2& frame_x_axis);
Vec2 TransformFromFrame(const Vec2& local, const Vec2& frame_origin,
                        const Vec2& frame_x_axis);

// Separating-axis test. Touching boxes intersect.
bool ObbIntersects(const OrientedBox& a, const OrientedBox& b);

struct Derivative {
  Vec2 velocity;
  double angular_velocity = 0.0;
  Vec2 acceleration;
  double angular_acceleration = 0.0;
};

// Central differences in the interior and one-sided at the ends. Headings
// are unwrapped before differencing. Needs at least two poses; with exactly
// two the acceleration is zero.
std::vector<Derivative> FiniteDifferenceDerivatives(const Trajectory& traj);

// Unwrapped copy of the heading sequence.
std::vector<double> UnwrappedHeadings(std::span<const Pose2> poses);

// Distance from `p` to the polyline through `path` (segment projection).
double PointToPolylineDistance(const Vec2& p, std::span<const Vec2> path);

double PointToSegmentDistance(const Vec2& p, const Vec2& a, const Vec2& b);

}  // namespace ccil
