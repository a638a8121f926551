#include "saca/geometry.hpp"

#include <algorithm>
#include <limits>

namespace saca {

double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a <= 0.0) a += 2.0 * kPi;
  return a - kPi;
}

Vec2 to_local(const Pose& frame, Vec2 world_point) {
  return rotate(world_point - frame.position, -frame.heading);
}

Vec2 to_local_dir(const Pose& frame, Vec2 world_vec) {
  return rotate(world_vec, -frame.heading);
}

Polygon box_polygon(const Pose& pose, double length, double width) {
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  const Vec2 corners[4] = {{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}};
  Polygon out;
  out.reserve(4);
  for (const Vec2& c : corners) out.push_back(pose.position + rotate(c, pose.heading));
  return out;
}

Polygon ellipse_polygon(Vec2 center, double a, double b, int segments) {
  Polygon out;
  out.reserve(static_cast<std::size_t>(segments));
  for (int i = 0; i < segments; ++i) {
    const double t = 2.0 * kPi * i / segments;
    out.push_back({center.x + a * std::cos(t), center.y + b * std::sin(t)});
  }
  return out;
}

namespace {

void project(std::span<const Vec2> poly, Vec2 axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Vec2& p : poly) {
    const double d = p.dot(axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

bool separated_along_edges(std::span<const Vec2> a, std::span<const Vec2> b) {
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = a[(i + 1) % n] - a[i];
    const Vec2 axis{-e.y, e.x};
    double alo, ahi, blo, bhi;
    project(a, axis, alo, ahi);
    project(b, axis, blo, bhi);
    if (ahi < blo || bhi < alo) return true;
  }
  return false;
}

}  // namespace

bool polygons_overlap(std::span<const Vec2> a, std::span<const Vec2> b) {
  if (a.empty() || b.empty()) return false;
  return !separated_along_edges(a, b) && !separated_along_edges(b, a);
}

bool point_in_polygon(std::span<const Vec2> poly, Vec2 p) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e = poly[(i + 1) % n] - poly[i];
    if (e.cross(p - poly[i]) < 0.0) return false;
  }
  return true;
}

Vec2 contact_point(std::span<const Vec2> a, std::span<const Vec2> b) {
  Vec2 sum;
  int count = 0;
  for (const Vec2& p : a)
    if (point_in_polygon(b, p)) {
      sum = sum + p;
      ++count;
    }
  for (const Vec2& p : b)
    if (point_in_polygon(a, p)) {
      sum = sum + p;
      ++count;
    }
  if (count > 0) return sum * (1.0 / count);

  double best = std::numeric_limits<double>::infinity();
  Vec2 mid;
  for (const Vec2& p : a)
    for (const Vec2& q : b) {
      const double d = (p - q).norm();
      if (d < best) {
        best = d;
        mid = (p + q) * 0.5;
      }
    }
  return mid;
}

}  // namespace saca
