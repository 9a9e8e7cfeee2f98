#include "ccil/svg.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ccil::svg {

namespace {

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string Escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Bounds {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  void Add(const Vec2& p) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) return;
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  void Pad(double m) {
    if (!std::isfinite(min_x)) {
      min_x = min_y = -1.0;
      max_x = max_y = 1.0;
    }
    min_x -= m;
    min_y -= m;
    max_x += m;
    max_y += m;
  }
};

}  // namespace

Canvas::Canvas(double min_x, double min_y, double max_x, double max_y, int width)
    : min_x_(min_x), min_y_(min_y), width_(width) {
  const double w = std::max(max_x - min_x, 1e-9);
  const double h = std::max(max_y - min_y, 1e-9);
  scale_ = width / w;
  height_ = std::max(1, static_cast<int>(std::lround(h * scale_)));
}

double Canvas::Px(double x) const { return (x - min_x_) * scale_; }
double Canvas::Py(double y) const { return height_ - (y - min_y_) * scale_; }

void Canvas::Polyline(const std::vector<Vec2>& pts, const std::string& color,
                      double stroke, double opacity) {
  if (pts.empty()) return;
  body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" +
           Num(stroke) + "\" stroke-opacity=\"" + Num(opacity) + "\" points=\"";
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
    body_ += Num(Px(p.x)) + "," + Num(Py(p.y)) + " ";
  }
  body_ += "\"/>\n";
}

void Canvas::Polygon(const std::vector<Vec2>& pts, const std::string& fill,
                     double opacity) {
  if (pts.empty()) return;
  body_ += "<polygon fill=\"" + fill + "\" fill-opacity=\"" + Num(opacity) +
           "\" stroke=\"none\" points=\"";
  for (const auto& p : pts) body_ += Num(Px(p.x)) + "," + Num(Py(p.y)) + " ";
  body_ += "\"/>\n";
}

void Canvas::Circle(const Vec2& c, double r_px, const std::string& fill) {
  body_ += "<circle cx=\"" + Num(Px(c.x)) + "\" cy=\"" + Num(Py(c.y)) + "\" r=\"" +
           Num(r_px) + "\" fill=\"" + fill + "\"/>\n";
}

void Canvas::Text(const Vec2& at, const std::string& text, int size) {
  TextPx(Px(at.x), Py(at.y), text, size);
}

void Canvas::TextPx(double x, double y, const std::string& text, int size) {
  body_ += "<text x=\"" + Num(x) + "\" y=\"" + Num(y) + "\" font-size=\"" +
           std::to_string(size) + "\" font-family=\"sans-serif\">" + Escape(text) +
           "</text>\n";
}

std::string Canvas::ToString() const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
      << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << ' '
      << height_ << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_ << "</svg>\n";
  return out.str();
}

std::vector<Vec2> Positions(const std::vector<Pose2>& poses) {
  std::vector<Vec2> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.Position());
  return out;
}

std::string ToyOverlay(double radius, const std::vector<std::vector<Pose2>>& rollouts,
                       const std::string& title) {
  const double r = radius + 15.0;
  Canvas c(-r, -r, r, r, 600);
  std::vector<Vec2> ring;
  for (int i = 0; i <= 360; ++i) {
    const double a = 2.0 * kPi * i / 360.0;
    ring.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  c.Polyline(ring, "#999999", 14.0, 0.4);
  for (const auto& ro : rollouts) {
    std::vector<Vec2> pts;
    for (const auto& p : ro) {
      // Clip runaway rollouts to the canvas.
      const Vec2 q = p.Position();
      if (std::abs(q.x) > 4 * r || std::abs(q.y) > 4 * r) break;
      pts.push_back(q);
    }
    c.Polyline(pts, "#d62728", 1.0, 0.35);
  }
  c.TextPx(10, 22, title, 16);
  return c.ToString();
}

std::string ReplayPlot(const ScenarioLog& log, const std::vector<Pose2>& executed,
                       const std::string& title) {
  Bounds b;
  for (const auto& p : log.ego) b.Add(p.Position());
  for (const auto& p : executed) b.Add(p.Position());
  b.Pad(20.0);
  Canvas c(b.min_x, b.min_y, b.max_x, b.max_y, 800);
  for (const auto& poly : log.map.polygons) {
    const std::string fill = poly.type == PolygonType::kCrosswalk  ? "#1f77b4"
                             : poly.type == PolygonType::kStopLine ? "#d62728"
                                                                   : "#bbbbbb";
    c.Polygon(poly.points, fill, 0.25);
  }
  for (const auto& pl : log.map.polylines) c.Polyline(pl.points, "#888888", 1.0, 0.8);
  for (const auto& a : log.agents) {
    c.Polyline(Positions(a.poses), "#2ca02c", 1.0, 0.6);
    const auto corners = a.BoxAt(a.poses.size() - 1).Corners();
    c.Polygon({corners.begin(), corners.end()}, "#2ca02c", 0.6);
  }
  c.Polyline(Positions(log.ego), "#1f77b4", 2.0, 0.8);
  c.Polyline(Positions(executed), "#d62728", 2.0, 0.9);
  c.Circle(log.goal, 4.0, "#9467bd");
  c.TextPx(10, 22, title, 16);
  return c.ToString();
}

std::string LqrPlot(const std::vector<Pose2>& targets, const std::vector<Pose2>& plan,
                    const std::string& title) {
  Bounds b;
  for (const auto& p : targets) b.Add(p.Position());
  for (const auto& p : plan) b.Add(p.Position());
  b.Pad(2.0);
  Canvas c(b.min_x, b.min_y, b.max_x, b.max_y, 700);
  for (const auto& p : targets) c.Circle(p.Position(), 3.0, "#7f7f7f");
  c.Polyline(Positions(plan), "#d62728", 2.0);
  c.TextPx(10, 22, title, 16);
  return c.ToString();
}

std::string BarChart(const std::vector<std::string>& labels,
                     const std::vector<double>& values, const std::string& title) {
  const int w = 120 * static_cast<int>(std::max<size_t>(labels.size(), 1)) + 80;
  const int h = 320;
  double top = 1e-9;
  for (double v : values) top = std::max(top, v);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\""
      << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"10\" y=\"22\" font-size=\"16\" font-family=\"sans-serif\">"
      << Escape(title) << "</text>\n";
  for (size_t i = 0; i < labels.size() && i < values.size(); ++i) {
    const double bh = 220.0 * values[i] / top;
    const double x = 60.0 + 120.0 * i;
    out << "<rect x=\"" << Num(x) << "\" y=\"" << Num(270.0 - bh)
        << "\" width=\"80\" height=\"" << Num(bh) << "\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << Num(x) << "\" y=\"290\" font-size=\"12\" "
        << "font-family=\"sans-serif\">" << Escape(labels[i]) << "</text>\n";
    out << "<text x=\"" << Num(x) << "\" y=\"" << Num(265.0 - bh)
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << Num(values[i])
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ccil::svg
