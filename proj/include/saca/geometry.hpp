#ifndef SACA_GEOMETRY_HPP
#define SACA_GEOMETRY_HPP

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace saca {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
  constexpr double cross(Vec2 o) const { return x * o.y - y * o.x; }
};

/// Rotates v by angle (radians, counter-clockwise).
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

/// Planar pose: position plus heading (x forward, y left, heading CCW from +x).
struct Pose {
  Vec2 position;
  double heading{0.0};
};

/// Expresses a world-frame point in the frame of `frame`.
Vec2 to_local(const Pose& frame, Vec2 world_point);
/// Expresses a vector (no translation) in the frame of `frame`.
Vec2 to_local_dir(const Pose& frame, Vec2 world_vec);

/// Convex polygon, counter-clockwise vertex order.
using Polygon = std::vector<Vec2>;

/// Rectangle of `length` along the heading and `width` across it.
Polygon box_polygon(const Pose& pose, double length, double width);
/// Inscribed polygon of an axis-aligned ellipse with semi-axes (a along x, b along y).
Polygon ellipse_polygon(Vec2 center, double a, double b, int segments = 48);

/// Separating-axis overlap test for convex polygons (touching counts as overlap).
bool polygons_overlap(std::span<const Vec2> a, std::span<const Vec2> b);

/// Approximate contact point of two overlapping convex polygons: centroid of the
/// vertices of each polygon that lie inside the other, or the midpoint of the
/// closest vertex pair when only edges cross.
Vec2 contact_point(std::span<const Vec2> a, std::span<const Vec2> b);

bool point_in_polygon(std::span<const Vec2> poly, Vec2 p);

}  // namespace saca

#endif
