#pragma once

#include <array>
#include <vector>

namespace pecbf {

/// Piecewise-linear reference path with arc-length parametrization.
class ReferencePath {
 public:
  ReferencePath() = default;
  explicit ReferencePath(std::vector<std::array<double, 2>> points);

  /// Straight segment followed by optional arcs; built incrementally.
  static ReferencePath straight(std::array<double, 2> from, std::array<double, 2> to);
  /// Appends a straight segment of given length along the current end heading.
  ReferencePath& extend(double length, double spacing = 0.5);
  /// Appends a circular arc; positive sweep turns left (counter-clockwise).
  ReferencePath& arc(double radius, double sweep, double spacing = 0.5);

  struct Projection {
    double s = 0.0;            // arc length of the closest point
    double lateral = 0.0;      // signed offset, positive to the left of the path
    double heading = 0.0;      // path tangent heading at the closest point
  };
  Projection project(double x, double y) const;

  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  const std::vector<std::array<double, 2>>& points() const { return points_; }
  double end_heading() const { return end_heading_; }

 private:
  void rebuild();

  std::vector<std::array<double, 2>> points_;
  std::vector<double> cumulative_;
  double end_heading_ = 0.0;  // exact tangent at the end, not the last chord
};

}  // namespace pecbf
