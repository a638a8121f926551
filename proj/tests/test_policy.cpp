#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "saca/policy.hpp"

using namespace saca;
using namespace saca::policy;

namespace {

VehicleState moving(double speed) {
  VehicleState e;
  e.speed = speed;
  return e;
}

RoadTopology wide_road() {
  RoadTopology r;
  r.kind = RoadKind::one_way_multilane;
  r.left_bound_m = 10.0;
  r.right_bound_m = 10.0;
  return r;
}

ScenarioSnapshot empty_scene(const RoadTopology& road, double speed) {
  WorldState w;
  w.road = road;
  w.ego.speed = speed;
  return make_snapshot(w);
}

}  // namespace

TEST(Policy, AebStopsAtClosedFormDistance) {
  const VehicleLimits lim;
  const TrajectoryTemplate t = generate(PolicyId::AEB, moving(14.0), wide_road(), lim);
  EXPECT_EQ(t.terminal, Terminal::stopped);
  EXPECT_NEAR(t.samples.back().position.x, 14.0 * 14.0 / (2.0 * lim.brake_max), 0.01);
  EXPECT_EQ(t.samples.back().speed, 0.0);
  EXPECT_NEAR(t.samples.back().position.y, 0.0, 1e-12);
}

TEST(Policy, LateralEscapesShiftOneLane) {
  const RoadTopology road = wide_road();
  const TrajectoryTemplate l = generate(PolicyId::AES_L, moving(12.0), road);
  const TrajectoryTemplate r = generate(PolicyId::ES_B_R, moving(12.0), road);
  EXPECT_NEAR(l.samples.back().position.y, road.lane_width_m, 0.01);
  EXPECT_NEAR(r.samples.back().position.y, -road.lane_width_m, 0.01);
  EXPECT_DOUBLE_EQ(l.samples.back().speed, 12.0);
  EXPECT_EQ(r.samples.back().speed, 0.0);
  EXPECT_EQ(l.terminal, Terminal::lane_changed);
  GenerateOptions slow;
  slow.target_speed = 5.0;
  EXPECT_DOUBLE_EQ(generate(PolicyId::ES_B_L, moving(12.0), road, {}, slow).samples.back().speed, 5.0);
}

TEST(Policy, DriftTurnsPerpendicular) {
  GenerateOptions o;
  const TrajectoryTemplate t = generate(PolicyId::T_D_R, moving(14.0), wide_road(), {}, o);
  EXPECT_EQ(t.terminal, Terminal::perpendicular);
  const TrajectorySample s = t.at(o.drift_time);
  EXPECT_NEAR(s.heading, -kPi / 2.0, 1e-9);
  EXPECT_NEAR(s.course, -o.drift_course_deg * kPi / 180.0, 1e-9);
  EXPECT_LT(t.samples.back().position.y, 0.0);
  const TrajectoryTemplate left = generate(PolicyId::T_D_L, moving(14.0), wide_road(), {}, o);
  EXPECT_NEAR(left.samples.back().position.y, -t.samples.back().position.y, 1e-9);
}

TEST(Policy, TemplateFollowsEgoFrame) {
  VehicleState e = moving(10.0);
  e.position = {5.0, -2.0};
  e.heading = kPi / 2;
  const TrajectoryTemplate t = generate(PolicyId::NI, e, wide_road());
  EXPECT_NEAR(t.samples.front().position.x, 5.0, 1e-12);
  EXPECT_NEAR(t.at(1.0).position.y, 8.0, 1e-9);
  EXPECT_NEAR(t.at(1.0).position.x, 5.0, 1e-9);
  EXPECT_NEAR(t.at(1.0).heading, kPi / 2, 1e-12);
}

TEST(Policy, InterpolationAndClamping) {
  const TrajectoryTemplate t = generate(PolicyId::NI, moving(10.0), wide_road());
  EXPECT_NEAR(t.at(0.125).position.x, 1.25, 1e-9);
  EXPECT_EQ(t.at(-1.0).position, t.samples.front().position);
  EXPECT_EQ(t.at(100.0).position, t.samples.back().position);
  EXPECT_THROW(TrajectoryTemplate{}.at(0.0), std::logic_error);
}

TEST(Policy, GenerateRejectsBadInput) {
  EXPECT_THROW(generate(PolicyId::AEB, moving(0.0), wide_road()), std::invalid_argument);
  EXPECT_NO_THROW(generate(PolicyId::NI, moving(0.0), wide_road()));
  GenerateOptions bad;
  bad.dt = 0.0;
  EXPECT_THROW(generate(PolicyId::AEB, moving(5.0), wide_road(), {}, bad), std::invalid_argument);
}

TEST(Policy, ValidateRoadBounds) {
  RoadTopology narrow = wide_road();
  narrow.left_bound_m = 1.5;
  const ScenarioSnapshot scene = empty_scene(narrow, 12.0);
  const Validation v = validate(generate(PolicyId::AES_L, moving(12.0), narrow), scene);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.clause, Clause::road_bounds);
  EXPECT_TRUE(validate(generate(PolicyId::AES_R, moving(12.0), narrow), scene).ok);
}

TEST(Policy, ValidateOccupiedLane) {
  WorldState w;
  w.road = wide_road();
  w.ego.speed = 12.0;
  ParticipantState car;
  car.id = "right-lane";
  car.position = {0.0, -3.5};
  car.velocity = {12.0, 0.0};
  car.footprint = default_footprint(car.kind);
  w.participants.push_back(car);
  const ScenarioSnapshot scene = make_snapshot(w);
  const Validation v = validate(generate(PolicyId::AES_R, w.ego, w.road), scene);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.clause, Clause::occupied_lane);
  EXPECT_NE(v.reason.find("right-lane"), std::string::npos);
  EXPECT_TRUE(validate(generate(PolicyId::AES_L, w.ego, w.road), scene).ok);
}

TEST(Policy, ValidateCollision) {
  WorldState w;
  w.road = wide_road();
  w.ego.speed = 14.0;
  w.obstacles.push_back({"wall", ObstacleShape::circle(1.0), {10.0, 0.0}, {}, 0.0});
  const ScenarioSnapshot scene = make_snapshot(w);
  const Validation v = validate(generate(PolicyId::AEB, w.ego, w.road), scene);
  EXPECT_FALSE(v.ok);
  EXPECT_EQ(v.clause, Clause::collision);
  w.obstacles[0].position = {20.0, 0.0};
  EXPECT_TRUE(validate(generate(PolicyId::AEB, w.ego, w.road), make_snapshot(w)).ok);
}

TEST(Policy, Severity) {
  for (int id = 0; id <= 4; ++id) EXPECT_EQ(trigger_severity(policy_from_int(id)), 0.5);
  EXPECT_EQ(trigger_severity(PolicyId::T_D_L), 1.0);
  EXPECT_EQ(trigger_severity(PolicyId::T_D_R), 1.0);
  EXPECT_EQ(trigger_severity(PolicyId::NI), 0.0);
  EXPECT_THROW(policy_from_int(8), std::invalid_argument);
}

TEST(Policy, CsvExport) {
  const TrajectoryTemplate t = generate(PolicyId::AEB, moving(8.0), wide_road());
  std::ostringstream out;
  export_csv(t, out);
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("t,x,y,heading,speed\n", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), t.samples.size() + 1);
}
