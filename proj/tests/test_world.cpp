#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "saca/world.hpp"

using namespace saca;

namespace {

WorldState straight_world(double speed) {
  WorldState w;
  w.ego.speed = speed;
  return w;
}

ParticipantState car(const std::string& id, Vec2 pos, Vec2 vel, Intention i = Intention::M) {
  ParticipantState p;
  p.id = id;
  p.kind = ParticipantKind::small_car;
  p.position = pos;
  p.velocity = vel;
  p.intention = i;
  p.footprint = default_footprint(p.kind);
  return p;
}

}  // namespace

TEST(World, TimeToCollision) {
  EXPECT_DOUBLE_EQ(*time_to_collision(16.0, 8.0), 2.0);
  EXPECT_FALSE(time_to_collision(16.0, 0.0).has_value());
  EXPECT_FALSE(time_to_collision(16.0, -1.0).has_value());
  EXPECT_THROW(time_to_collision(-1.0, 5.0), std::invalid_argument);
}

TEST(World, StraightEgoMatchesClosedForm) {
  WorldState w = straight_world(10.0);
  w.ego.control.accel = -4.0;
  const double dt = 0.05;
  double x = 0.0, v = 10.0;
  for (int k = 0; k < 40; ++k) {
    w = step(w, dt);
    x += v * dt;
    v = std::max(0.0, v - 4.0 * dt);
  }
  EXPECT_NEAR(w.ego.position.x, x, 1e-9);
  EXPECT_NEAR(w.ego.speed, v, 1e-9);
  EXPECT_NEAR(w.ego.position.y, 0.0, 1e-12);
}

TEST(World, ControlIsClampedToLimits) {
  WorldState w = straight_world(10.0);
  w.ego.control = {2.0, -50.0};
  w = step(w, 0.05);
  EXPECT_DOUBLE_EQ(w.ego.control.steer, w.limits.steer_max);
  EXPECT_DOUBLE_EQ(w.ego.control.accel, -w.limits.brake_max);
  EXPECT_NEAR(w.ego.speed, 10.0 - 0.05 * w.limits.brake_max, 1e-12);
}

TEST(World, SpeedNeverNegative) {
  WorldState w = straight_world(0.2);
  w.ego.control.accel = -8.0;
  for (int k = 0; k < 10; ++k) w = step(w, 0.05);
  EXPECT_EQ(w.ego.speed, 0.0);
}

TEST(World, StepRejectsBadDt) {
  const WorldState w = straight_world(5.0);
  EXPECT_THROW(step(w, 0.0), std::invalid_argument);
  EXPECT_THROW(step(w, 0.2), std::invalid_argument);
}

TEST(World, LaneChangeScriptStopsAfterOneLane) {
  ParticipantState p = car("c", {0.0, 0.0}, {10.0, 1.5}, Intention::LC);
  const ScriptParams script;
  const VehicleLimits limits;
  for (int k = 0; k < 200; ++k) p = step_participant(p, script, limits, 0.05);
  EXPECT_NEAR(p.velocity.y, 0.0, 1e-12);
  EXPECT_NEAR(p.velocity.x, 10.0, 1e-12);
  EXPECT_NEAR(p.position.y, script.lane_change_width, script.lateral_speed * 0.05 + 1e-9);
}

TEST(World, FullBrakeScriptStopsParticipant) {
  ParticipantState p = car("c", {0.0, 0.0}, {6.0, 0.0}, Intention::FB);
  for (int k = 0; k < 40; ++k) p = step_participant(p, ScriptParams{}, VehicleLimits{}, 0.05);
  EXPECT_EQ(p.velocity.x, 0.0);
  // Stopping distance of a 6 m/s^2 stop from 6 m/s is 3 m; Euler adds at most one step.
  EXPECT_NEAR(p.position.x, 3.0, 6.0 * 0.05 + 1e-9);
}

TEST(World, PedestrianSpeedIsCapped) {
  ParticipantState p = car("p", {0.0, 0.0}, {0.0, 5.0}, Intention::M);
  p.kind = ParticipantKind::pedestrian;
  p.intention = Intention::LC;
  p.travel_dir = {0.0, 1.0};
  p.velocity = {0.0, 5.0};
  const VehicleLimits limits;
  p = step_participant(p, ScriptParams{5.0, 10.0, 3.5}, limits, 0.05);
  EXPECT_LE(p.velocity.norm(), limits.pedestrian_speed_max + 1e-12);
}

TEST(World, HValueSigns) {
  Obstacle circle{"c", ObstacleShape::circle(2.0), {10.0, 0.0}, {}, 0.0};
  EXPECT_NEAR(h_value(Vec2{10.0, 0.0}, circle), 2.0, 1e-12);
  EXPECT_NEAR(h_value(Vec2{15.0, 0.0}, circle), -3.0, 1e-12);
  Obstacle ell{"e", ObstacleShape::ellipse(3.5, 1.75), {0.0, 0.0}, {}, 0.0};
  EXPECT_NEAR(h_value(Vec2{0.0, 1.75}, ell), 0.0, 1e-12);
  EXPECT_NEAR(h_value(Vec2{3.5, 0.0}, ell), 0.0, 1e-12);
  EXPECT_GT(h_value(Vec2{1.0, 0.5}, ell), 0.0);
  Obstacle rect{"r", ObstacleShape::rectangle(4.0, 2.0), {0.0, 0.0}, {}, 0.0};
  EXPECT_NEAR(h_value(Vec2{4.0, 0.0}, rect), -2.0, 1e-12);
  EXPECT_NEAR(h_value(Vec2{0.0, 0.0}, rect), 1.0, 1e-12);
}

TEST(World, ZoneClassification) {
  VehicleState ego;
  EXPECT_EQ(classify_zone(ego, {2.0, 0.1}), ImpactZone::front);
  EXPECT_EQ(classify_zone(ego, {0.0, 0.9}), ImpactZone::side);
  EXPECT_EQ(classify_zone(ego, {-2.0, 0.0}), ImpactZone::rear);
  ego.heading = kPi / 2;  // the car's nose now points to +y
  EXPECT_EQ(classify_zone(ego, {0.0, 2.0}), ImpactZone::front);
  EXPECT_EQ(classify_zone(ego, {2.0, 0.0}), ImpactZone::side);
}

TEST(World, CheckImpactReportsRelativeSpeed) {
  WorldState w = straight_world(10.0);
  w.participants.push_back(car("lead", {4.0, 0.0}, {4.0, 0.0}));
  const ImpactReport r = check_impact(w);
  ASSERT_TRUE(r.occurred);
  EXPECT_EQ(r.agent_id, "lead");
  EXPECT_EQ(r.zone, ImpactZone::front);
  EXPECT_NEAR(r.rel_speed, 6.0, 1e-12);

  w.participants[0].position = {10.0, 0.0};
  EXPECT_FALSE(check_impact(w).occurred);
}

TEST(World, HazardTtcMatchesGapOverClosingSpeed) {
  WorldState w = straight_world(10.0);
  w.participants.push_back(car("parked", {20.0, 0.0}, {0.0, 0.0}));
  const auto h = hazard_ttc(w);
  ASSERT_TRUE(h.has_value());
  const double gap = 20.0 - 0.5 * w.participants[0].footprint.length - 0.5 * w.limits.length;
  EXPECT_NEAR(h->ttc, gap / 10.0, 1e-3);
  EXPECT_EQ(h->agent_id, "parked");

  w.participants[0].position = {20.0, 10.0};
  EXPECT_FALSE(hazard_ttc(w).has_value());
}

TEST(World, DetectImpactReturnsFirstFrame) {
  WorldState w = straight_world(10.0);
  w.participants.push_back(car("parked", {12.0, 0.0}, {0.0, 0.0}));
  std::vector<WorldState> frames{w};
  for (int k = 0; k < 20; ++k) frames.push_back(step(frames.back(), 0.05));
  const ImpactReport r = detect_impact(frames);
  ASSERT_TRUE(r.occurred);
  // Contact when the ego front reaches the car's rear: 12 - 2.25 - 2.25 = 7.5 m.
  EXPECT_NEAR(r.time, 0.75, 0.05 + 1e-9);
}
