#include <gtest/gtest.h>

#include <filesystem>

#include "saca/risk_model.hpp"

using namespace saca;

TEST(RiskModel, DefaultSpecScalesWithShape) {
  const auto small = default_relative_spec(ObstacleShape::circle(1.0));
  const auto big = default_relative_spec(ObstacleShape::circle(5.0));
  ASSERT_EQ(small.axes.size(), 4u);
  EXPECT_NEAR(small.axes[0].min, -7.0, 1e-12);
  EXPECT_NEAR(small.axes[0].max, 31.0, 1e-12);
  EXPECT_NEAR(big.axes[1].max, 11.0, 1e-12);
}

TEST(RiskModel, RelativeSafetyMatchesWorldH) {
  const ObstacleShape shape = ObstacleShape::ellipse(3.5, 1.75);
  const auto h = relative_safety(shape);
  const Obstacle o{"e", shape, {10.0, 2.0}, {}, 0.0};
  for (Vec2 ego : {Vec2{10.0, 2.0}, Vec2{6.0, 2.0}, Vec2{10.0, 5.0}, Vec2{0.0, 0.0}}) {
    reach::State s{};
    s[0] = o.position.x - ego.x;
    s[1] = o.position.y - ego.y;
    EXPECT_NEAR(h(s), h_value(ego, o), 1e-9);
  }
}

TEST(RiskModel, RiskIsHighAtCenterAndLowFarAway) {
  const auto surface = shared_risk_model().surface(ObstacleShape::circle(2.0));
  EXPECT_GT(surface->risk_at({0.0, 0.0}, 8.0, 0.0), 0.9);
  EXPECT_LT(surface->risk_at({6.0, 7.0}, 8.0, 0.0), surface->risk_at({2.5, 0.0}, 8.0, 0.0));
  EXPECT_LT(surface->risk_at({-30.0, 6.0}, 8.0, 0.0), 0.1);
  // Approaching from behind at speed is riskier than sitting beside it.
  EXPECT_GT(surface->risk_at({-6.0, 0.0}, 12.0, 0.0), surface->risk_at({-6.0, 6.0}, 12.0, 0.0));
}

TEST(RiskModel, FillWritesEveryObstacle) {
  WorldState w;
  w.ego.speed = 10.0;
  w.obstacles.push_back({"near", ObstacleShape::circle(2.0), {5.0, 0.0}, {}, 0.0});
  w.obstacles.push_back({"far", ObstacleShape::circle(2.0), {5.0, 30.0}, {}, 0.0});
  shared_risk_model().fill(w);
  EXPECT_GT(w.obstacles[0].risk, w.obstacles[1].risk);
  for (const auto& o : w.obstacles) {
    EXPECT_GE(o.risk, 0.0);
    EXPECT_LE(o.risk, 1.0);
  }
}

TEST(RiskModel, FieldHasRequestedShape) {
  const auto surface = shared_risk_model().surface(ObstacleShape::circle(2.0));
  RiskSlice slice;
  slice.nx = 7;
  slice.ny = 5;
  const RiskField f = risk_field(*surface, slice);
  EXPECT_EQ(f.xs.size(), 7u);
  EXPECT_EQ(f.ys.size(), 5u);
  EXPECT_EQ(f.values.size(), 35u);
  EXPECT_DOUBLE_EQ(f.xs.front(), slice.x_min);
  EXPECT_DOUBLE_EQ(f.ys.back(), slice.y_max);
}

TEST(RiskModel, CacheKeysDistinguishShapes) {
  EXPECT_NE(shape_cache_key(ObstacleShape::circle(2.0)), shape_cache_key(ObstacleShape::circle(2.5)));
  EXPECT_NE(shape_cache_key(ObstacleShape::ellipse(3.5, 1.75)), shape_cache_key(ObstacleShape::rectangle(3.5, 1.75)));
  EXPECT_EQ(shape_cache_key(ObstacleShape::circle(2.0)), shape_cache_key(ObstacleShape::circle(2.0)));
}

TEST(RiskModel, DiskCacheAvoidsSecondSolve) {
  const auto dir = std::filesystem::temp_directory_path() / "saca_test_grid_cache";
  std::filesystem::remove_all(dir);
  RiskModelOptions opts;
  opts.cache_dir = dir;
  const ObstacleShape shape = ObstacleShape::circle(1.5);
  double first_risk = 0.0;
  {
    RiskModel m(opts);
    first_risk = m.surface(shape)->risk_at({-3.0, 0.5}, 9.0, 0.1);
    EXPECT_EQ(m.solves(), 1u);
    m.surface(shape);
    EXPECT_EQ(m.solves(), 1u);
  }
  RiskModel again(opts);
  EXPECT_NEAR(again.surface(shape)->risk_at({-3.0, 0.5}, 9.0, 0.1), first_risk, 1e-9);
  EXPECT_EQ(again.solves(), 0u);
  std::filesystem::remove_all(dir);
}
