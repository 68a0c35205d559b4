#include "pecbf/path.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pecbf {

ReferencePath::ReferencePath(std::vector<std::array<double, 2>> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw std::invalid_argument("reference path needs at least two points");
  const auto& a = points_[points_.size() - 2];
  const auto& b = points_.back();
  end_heading_ = std::atan2(b[1] - a[1], b[0] - a[0]);
  rebuild();
}

ReferencePath ReferencePath::straight(std::array<double, 2> from, std::array<double, 2> to) {
  return ReferencePath({from, to});
}

void ReferencePath::rebuild() {
  cumulative_.assign(points_.size(), 0.0);
  for (size_t i = 1; i < points_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + std::hypot(points_[i][0] - points_[i - 1][0],
                                                     points_[i][1] - points_[i - 1][1]);
  }
}

ReferencePath& ReferencePath::extend(double length, double spacing) {
  const double h = end_heading();
  const auto start = points_.back();
  const int n = std::max(1, static_cast<int>(std::ceil(length / spacing)));
  for (int i = 1; i <= n; ++i) {
    const double d = length * i / n;
    points_.push_back({start[0] + d * std::cos(h), start[1] + d * std::sin(h)});
  }
  rebuild();
  return *this;
}

ReferencePath& ReferencePath::arc(double radius, double sweep, double spacing) {
  if (!(radius > 0.0)) throw std::invalid_argument("arc radius must be positive");
  const double h = end_heading();
  const auto start = points_.back();
  const double side = sweep >= 0.0 ? 1.0 : -1.0;
  // centre lies to the left for a left turn
  const double cx = start[0] - side * radius * std::sin(h);
  const double cy = start[1] + side * radius * std::cos(h);
  const double a0 = std::atan2(start[1] - cy, start[0] - cx);
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(sweep) * radius / spacing)));
  for (int i = 1; i <= n; ++i) {
    const double a = a0 + sweep * i / n;
    points_.push_back({cx + radius * std::cos(a), cy + radius * std::sin(a)});
  }
  end_heading_ = std::remainder(h + sweep, 2.0 * std::numbers::pi);
  rebuild();
  return *this;
}

ReferencePath::Projection ReferencePath::project(double x, double y) const {
  Projection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < points_.size(); ++i) {
    const auto& a = points_[i];
    const auto& b = points_[i + 1];
    const double ex = b[0] - a[0];
    const double ey = b[1] - a[1];
    const double len2 = ex * ex + ey * ey;
    if (len2 == 0.0) continue;
    double t = ((x - a[0]) * ex + (y - a[1]) * ey) / len2;
    // the first and last segments extend indefinitely
    if (i > 0) t = std::max(t, 0.0);
    if (i + 2 < points_.size()) t = std::min(t, 1.0);
    const double px = a[0] + t * ex;
    const double py = a[1] + t * ey;
    const double d2 = (x - px) * (x - px) + (y - py) * (y - py);
    if (d2 < best_d2) {
      best_d2 = d2;
      const double len = std::sqrt(len2);
      best.s = cumulative_[i] + t * len;
      best.lateral = (ex * (y - a[1]) - ey * (x - a[0])) / len;
      best.heading = std::atan2(ey, ex);
    }
  }
  return best;
}

}  // namespace pecbf
