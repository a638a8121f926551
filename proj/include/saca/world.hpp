#ifndef SACA_WORLD_HPP
#define SACA_WORLD_HPP

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "saca/geometry.hpp"
#include "saca/labels.hpp"

namespace saca {

/// Ego actuation limits and body dimensions.
struct VehicleLimits {
  double steer_max{0.6};      // [rad]
  double brake_max{8.0};      // [m/s^2], magnitude of the strongest deceleration
  double drive_max{3.0};      // [m/s^2]
  double wheelbase{2.7};      // [m]
  double length{4.5};         // [m]
  double width{1.8};          // [m]
  double pedestrian_speed_max{3.0};
};

struct Control {
  double steer{0.0};  // [rad]
  double accel{0.0};  // [m/s^2]
};

struct VehicleState {
  Vec2 position;        // [m]
  double heading{0.0};  // [rad]
  double speed{0.0};    // [m/s], longitudinal, never negative
  double yaw_rate{0.0}; // [rad/s]
  double slip{0.0};     // [rad], course minus heading; nonzero only while a drift template drives the ego
  Control control;

  Pose pose() const { return {position, heading}; }
  Vec2 velocity() const { return rotate({speed, 0.0}, heading + slip); }
};

enum class ParticipantKind { small_car, large_truck, suv, pedestrian };

std::string_view kind_key(ParticipantKind k);
/// Display name used in scene descriptions ("Large Truck", "small car", ...).
std::string_view kind_display(ParticipantKind k);
std::optional<ParticipantKind> parse_kind(std::string_view key);

struct Footprint {
  double length{4.5};
  double width{1.8};
};

Footprint default_footprint(ParticipantKind k);

/// A surrounding road user. In a world state `intention` is the scripted motion
/// the participant actually follows; in a scenario snapshot it is the predicted
/// label and `confidence`/`ranking` carry the decoder's view.
struct ParticipantState {
  std::string id;
  ParticipantKind kind{ParticipantKind::small_car};
  Vec2 position;
  Vec2 velocity;
  Intention intention{Intention::M};
  double confidence{1.0};
  std::array<Intention, kIntentionCount> ranking = kAllIntentions;
  Footprint footprint;
  Vec2 travel_dir{1.0, 0.0};  // unit; longitudinal axis of the participant's own motion
  double lateral_shift{0.0};  // lateral distance covered by the current lane-change script

  double heading() const { return std::atan2(travel_dir.y, travel_dir.x); }
};

enum class ShapeKind { ellipse, circle, rectangle };

std::string_view shape_key(ShapeKind k);
std::optional<ShapeKind> parse_shape(std::string_view key);

/// Axis-aligned obstacle envelope. For ellipses `a` is the semi-axis along x
/// (major) and `b` along y; circles use `a` as radius; rectangles use `a` as
/// length along x and `b` as width along y.
struct ObstacleShape {
  ShapeKind kind{ShapeKind::circle};
  double a{1.0};
  double b{1.0};

  static ObstacleShape ellipse(double major, double minor) { return {ShapeKind::ellipse, major, minor}; }
  static ObstacleShape circle(double r) { return {ShapeKind::circle, r, r}; }
  static ObstacleShape rectangle(double len, double wid) { return {ShapeKind::rectangle, len, wid}; }
  bool valid() const;
};

struct Obstacle {
  std::string id;
  ObstacleShape shape;
  Vec2 position;
  Vec2 velocity;
  double risk{0.0};
};

enum class RoadKind { intersection, one_way_multilane };

struct RoadTopology {
  RoadKind kind{RoadKind::one_way_multilane};
  double left_bound_m{5.25};
  double right_bound_m{5.25};
  double lane_width_m{3.5};
};

/// Parameters of the scripted participant motion.
struct ScriptParams {
  double brake_decel{6.0};       // FB / LB / RB
  double lateral_speed{1.5};     // LC / RC / LB / RB
  double lane_change_width{3.5}; // lateral distance of one lane change
};

struct WorldState {
  double time{0.0};
  VehicleState ego;
  RoadTopology road;
  std::vector<Obstacle> obstacles;
  std::vector<ParticipantState> participants;
  VehicleLimits limits;
  ScriptParams script;
};

enum class ImpactZone { none, front, side, rear };

std::string_view zone_name(ImpactZone z);

struct ImpactReport {
  bool occurred{false};
  ImpactZone zone{ImpactZone::none};
  double rel_speed{0.0};  // [m/s]
  std::string agent_id;
  double time{0.0};
};

/// Signed safety margin of the ego reference point with respect to an obstacle:
/// positive inside the envelope (penetration depth), negative outside
/// (clearance). Circles give radius - distance; ellipses scale the normalized
/// radial coordinate by the minor semi-axis, (1 - rho) * min(a, b), which is
/// 1-Lipschitz and exact along the minor axis; rectangles use the negated
/// signed distance to the box.
double h_value(Vec2 ego_position, const Obstacle& obstacle);
inline double h_value(const VehicleState& ego, const Obstacle& obstacle) {
  return h_value(ego.position, obstacle);
}

inline constexpr double kClosingEpsilon = 0.01;  // [m/s]

/// gap / closing_speed when the gap is closing faster than kClosingEpsilon.
/// Throws std::invalid_argument for a negative gap.
std::optional<double> time_to_collision(double gap_m, double closing_speed);

/// Advances the ego by one forward-Euler step of the kinematic bicycle model.
VehicleState step_ego(const VehicleState& ego, const VehicleLimits& limits, double dt);
/// Advances a participant along its intention script.
ParticipantState step_participant(const ParticipantState& p, const ScriptParams& script,
                                  const VehicleLimits& limits, double dt);
/// One fixed step of the whole world. dt must lie in (0, 0.1].
WorldState step(const WorldState& world, double dt);

inline constexpr double kDefaultDt = 0.05;

Polygon ego_polygon(const VehicleState& ego, const VehicleLimits& limits, double inflate = 0.0);
Polygon participant_polygon(const ParticipantState& p);
Polygon obstacle_polygon(const Obstacle& o);

/// First overlap in a single frame, if any.
ImpactReport check_impact(const WorldState& frame, double ego_inflate = 0.0);
/// First instant in a trajectory (frames sampled at a common dt) where the ego
/// footprint overlaps any agent or obstacle.
ImpactReport detect_impact(std::span<const WorldState> frames, double ego_inflate = 0.0);

ImpactZone classify_zone(const VehicleState& ego, Vec2 contact_world);

struct HazardContact {
  double ttc{0.0};
  std::string agent_id;
};

/// Time until the first footprint contact between the ego and any agent when
/// everything keeps its current velocity. Empty if no contact within horizon.
std::optional<HazardContact> hazard_ttc(const WorldState& world, double horizon = 8.0,
                                        double probe_dt = 0.05);

}  // namespace saca

#endif
