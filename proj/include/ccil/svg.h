#pragma once

#include <string>
#include <vector>

#include "ccil/geometry.h"
#include "ccil/mapgraph.h"
#include "ccil/scenario.h"

namespace ccil::svg {

// Minimal SVG writer with a world-to-pixel transform (y up).
class Canvas {
 public:
  Canvas(double min_x, double min_y, double max_x, double max_y, int width = 800);

  void Polyline(const std::vector<Vec2>& pts, const std::string& color,
                double stroke = 1.0, double opacity = 1.0);
  void Polygon(const std::vector<Vec2>& pts, const std::string& fill,
               double opacity = 0.3);
  void Circle(const Vec2& c, double r_px, const std::string& fill);
  void Text(const Vec2& at, const std::string& text, int size = 14);
  void TextPx(double x, double y, const std::string& text, int size = 14);

  int width() const { return width_; }
  int height() const { return height_; }
  std::string ToString() const;

 private:
  double Px(double x) const;
  double Py(double y) const;

  double min_x_, min_y_, scale_;
  int width_, height_;
  std::string body_;
};

std::vector<Vec2> Positions(const std::vector<Pose2>& poses);

// Ring lane with many rollouts drawn on top of each other.
std::string ToyOverlay(double radius, const std::vector<std::vector<Pose2>>& rollouts,
                       const std::string& title);

std::string ReplayPlot(const ScenarioLog& log, const std::vector<Pose2>& executed,
                       const std::string& title);

std::string LqrPlot(const std::vector<Pose2>& targets, const std::vector<Pose2>& plan,
                    const std::string& title);

std::string BarChart(const std::vector<std::string>& labels,
                     const std::vector<double>& values, const std::string& title);

}  // namespace ccil::svg
