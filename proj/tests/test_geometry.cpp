#include <gtest/gtest.h>

#include <cmath>

#include "saca/geometry.hpp"

using namespace saca;

TEST(Geometry, WrapAngleStaysInHalfOpenRange) {
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(-kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(2.0 * kPi + 0.25), 0.25, 1e-12);
  for (double a = -20.0; a < 20.0; a += 0.37) {
    const double w = wrap_angle(a);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::cos(w), std::cos(a), 1e-9);
    EXPECT_NEAR(std::sin(w), std::sin(a), 1e-9);
  }
}

TEST(Geometry, LocalFrameRoundTrip) {
  const Pose frame{{3.0, -2.0}, 0.7};
  const Vec2 p{5.5, 1.25};
  const Vec2 local = to_local(frame, p);
  const Vec2 back = frame.position + rotate(local, frame.heading);
  EXPECT_NEAR(back.x, p.x, 1e-12);
  EXPECT_NEAR(back.y, p.y, 1e-12);

  const Vec2 left = to_local_dir({{0, 0}, kPi / 2}, {1.0, 0.0});
  EXPECT_NEAR(left.x, 0.0, 1e-12);
  EXPECT_NEAR(left.y, -1.0, 1e-12);
}

TEST(Geometry, BoxPolygonCornersAndOrientation) {
  const Polygon box = box_polygon({{0.0, 0.0}, 0.0}, 4.0, 2.0);
  ASSERT_EQ(box.size(), 4u);
  double area = 0.0;
  for (std::size_t i = 0; i < box.size(); ++i) area += box[i].cross(box[(i + 1) % box.size()]);
  EXPECT_NEAR(0.5 * area, 8.0, 1e-12);  // positive: counter-clockwise
  for (const Vec2& v : box) {
    EXPECT_NEAR(std::abs(v.x), 2.0, 1e-12);
    EXPECT_NEAR(std::abs(v.y), 1.0, 1e-12);
  }
}

TEST(Geometry, EllipsePolygonIsInscribed) {
  const Polygon e = ellipse_polygon({1.0, 2.0}, 3.5, 1.75, 64);
  ASSERT_EQ(e.size(), 64u);
  for (const Vec2& v : e) {
    const double rho = std::pow((v.x - 1.0) / 3.5, 2) + std::pow((v.y - 2.0) / 1.75, 2);
    EXPECT_NEAR(rho, 1.0, 1e-9);
  }
  EXPECT_TRUE(point_in_polygon(e, {1.0, 2.0}));
  EXPECT_FALSE(point_in_polygon(e, {1.0, 4.0}));
}

TEST(Geometry, OverlapSeparatedTouchingAndRotated) {
  const Polygon a = box_polygon({{0.0, 0.0}, 0.0}, 2.0, 2.0);
  EXPECT_FALSE(polygons_overlap(a, box_polygon({{2.5, 0.0}, 0.0}, 2.0, 2.0)));
  EXPECT_TRUE(polygons_overlap(a, box_polygon({{2.0, 0.0}, 0.0}, 2.0, 2.0)));
  EXPECT_TRUE(polygons_overlap(a, box_polygon({{1.5, 1.5}, 0.0}, 2.0, 2.0)));
  // A diamond whose bounding box overlaps but whose body does not.
  EXPECT_FALSE(polygons_overlap(a, box_polygon({{2.3, 2.3}, kPi / 4}, 2.0, 2.0)));
}

TEST(Geometry, ContactPointLiesInBothPolygons) {
  const Polygon a = box_polygon({{0.0, 0.0}, 0.0}, 4.0, 2.0);
  const Polygon b = box_polygon({{3.5, 0.0}, 0.0}, 4.0, 2.0);
  const Vec2 c = contact_point(a, b);
  EXPECT_GE(c.x, 1.5 - 1e-9);
  EXPECT_LE(c.x, 2.0 + 1e-9);
  EXPECT_NEAR(c.y, 0.0, 1e-9);
}
