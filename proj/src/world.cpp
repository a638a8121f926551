#include "saca/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace saca {

// ---------------------------------------------------------------- labels

std::string_view intention_code(Intention i) {
  switch (i) {
    case Intention::M: return "M";
    case Intention::LC: return "LC";
    case Intention::RC: return "RC";
    case Intention::FB: return "FB";
    case Intention::LB: return "LB";
    case Intention::RB: return "RB";
  }
  return "?";
}

std::string_view intention_name(Intention i) {
  switch (i) {
    case Intention::M: return "Maintain";
    case Intention::LC: return "Left Lane Change";
    case Intention::RC: return "Right Lane Change";
    case Intention::FB: return "Forward Braking";
    case Intention::LB: return "Left Braking";
    case Intention::RB: return "Right Braking";
  }
  return "?";
}

std::optional<Intention> parse_intention(std::string_view code) {
  for (Intention i : kAllIntentions)
    if (intention_code(i) == code) return i;
  return std::nullopt;
}

std::string_view policy_name(PolicyId p) {
  switch (p) {
    case PolicyId::AEB: return "AEB";
    case PolicyId::AES_L: return "AES-L";
    case PolicyId::AES_R: return "AES-R";
    case PolicyId::ES_B_L: return "ES-B-L";
    case PolicyId::ES_B_R: return "ES-B-R";
    case PolicyId::T_D_L: return "T-D-L";
    case PolicyId::T_D_R: return "T-D-R";
    case PolicyId::NI: return "NI";
  }
  return "?";
}

PolicyId policy_from_int(int id) {
  if (id < 0 || id >= kPolicyCount) throw std::invalid_argument("policy id out of range: " + std::to_string(id));
  return static_cast<PolicyId>(id);
}

// ---------------------------------------------------------------- kinds

std::string_view kind_key(ParticipantKind k) {
  switch (k) {
    case ParticipantKind::small_car: return "small_car";
    case ParticipantKind::large_truck: return "large_truck";
    case ParticipantKind::suv: return "suv";
    case ParticipantKind::pedestrian: return "pedestrian";
  }
  return "?";
}

std::string_view kind_display(ParticipantKind k) {
  switch (k) {
    case ParticipantKind::small_car: return "small car";
    case ParticipantKind::large_truck: return "Large Truck";
    case ParticipantKind::suv: return "SUV";
    case ParticipantKind::pedestrian: return "pedestrian";
  }
  return "?";
}

std::optional<ParticipantKind> parse_kind(std::string_view key) {
  for (ParticipantKind k : {ParticipantKind::small_car, ParticipantKind::large_truck, ParticipantKind::suv,
                            ParticipantKind::pedestrian})
    if (kind_key(k) == key) return k;
  return std::nullopt;
}

Footprint default_footprint(ParticipantKind k) {
  switch (k) {
    case ParticipantKind::small_car: return {4.5, 1.8};
    case ParticipantKind::large_truck: return {12.0, 2.5};
    case ParticipantKind::suv: return {4.8, 1.9};
    case ParticipantKind::pedestrian: return {0.6, 0.6};
  }
  return {};
}

std::string_view shape_key(ShapeKind k) {
  switch (k) {
    case ShapeKind::ellipse: return "ellipse";
    case ShapeKind::circle: return "circle";
    case ShapeKind::rectangle: return "rectangle";
  }
  return "?";
}

std::optional<ShapeKind> parse_shape(std::string_view key) {
  for (ShapeKind k : {ShapeKind::ellipse, ShapeKind::circle, ShapeKind::rectangle})
    if (shape_key(k) == key) return k;
  return std::nullopt;
}

bool ObstacleShape::valid() const { return a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b); }

std::string_view zone_name(ImpactZone z) {
  switch (z) {
    case ImpactZone::none: return "none";
    case ImpactZone::front: return "front";
    case ImpactZone::side: return "side";
    case ImpactZone::rear: return "rear";
  }
  return "?";
}

// ---------------------------------------------------------------- safety margin

double h_value(Vec2 ego_position, const Obstacle& obstacle) {
  const Vec2 d = ego_position - obstacle.position;
  const ObstacleShape& s = obstacle.shape;
  switch (s.kind) {
    case ShapeKind::circle:
      return s.a - d.norm();
    case ShapeKind::ellipse: {
      const double rho = std::hypot(d.x / s.a, d.y / s.b);
      return (1.0 - rho) * std::min(s.a, s.b);
    }
    case ShapeKind::rectangle: {
      const double qx = std::abs(d.x) - 0.5 * s.a;
      const double qy = std::abs(d.y) - 0.5 * s.b;
      const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
      const double inside = std::min(std::max(qx, qy), 0.0);
      return -(outside + inside);
    }
  }
  return 0.0;
}

std::optional<double> time_to_collision(double gap_m, double closing_speed) {
  if (!(gap_m >= 0.0)) throw std::invalid_argument("time_to_collision: negative gap");
  if (closing_speed > kClosingEpsilon) return gap_m / closing_speed;
  return std::nullopt;
}

// ---------------------------------------------------------------- stepping

VehicleState step_ego(const VehicleState& ego, const VehicleLimits& limits, double dt) {
  VehicleState next = ego;
  next.slip = 0.0;
  const double steer = std::clamp(ego.control.steer, -limits.steer_max, limits.steer_max);
  const double accel = std::clamp(ego.control.accel, -limits.brake_max, limits.drive_max);
  next.control = {steer, accel};
  next.yaw_rate = ego.speed / limits.wheelbase * std::tan(steer);
  next.position = ego.position + rotate({ego.speed * dt, 0.0}, ego.heading);
  next.heading = wrap_angle(ego.heading + next.yaw_rate * dt);
  next.speed = std::max(0.0, ego.speed + accel * dt);
  return next;
}

ParticipantState step_participant(const ParticipantState& p, const ScriptParams& script,
                                  const VehicleLimits& limits, double dt) {
  ParticipantState next = p;
  next.position = p.position + p.velocity * dt;

  const Vec2 fwd = p.travel_dir;
  const Vec2 left{-fwd.y, fwd.x};
  double v_long = p.velocity.dot(fwd);
  double v_lat = p.velocity.dot(left);

  const bool braking = p.intention == Intention::FB || p.intention == Intention::LB || p.intention == Intention::RB;
  double lat_sign = 0.0;
  if (p.intention == Intention::LC || p.intention == Intention::LB) lat_sign = 1.0;
  if (p.intention == Intention::RC || p.intention == Intention::RB) lat_sign = -1.0;

  if (p.intention != Intention::M) {
    if (braking) v_long = std::max(0.0, v_long - script.brake_decel * dt);
    if (lat_sign != 0.0) {
      next.lateral_shift = p.lateral_shift + std::abs(v_lat) * dt;
      v_lat = next.lateral_shift < script.lane_change_width ? lat_sign * script.lateral_speed : 0.0;
    } else {
      v_lat = 0.0;
    }
    next.velocity = fwd * v_long + left * v_lat;
  }

  if (p.kind == ParticipantKind::pedestrian) {
    const double s = next.velocity.norm();
    if (s > limits.pedestrian_speed_max) next.velocity = next.velocity * (limits.pedestrian_speed_max / s);
  }
  return next;
}

WorldState step(const WorldState& world, double dt) {
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("step: dt must lie in (0, 0.1]");
  WorldState next = world;
  next.time = world.time + dt;
  next.ego = step_ego(world.ego, world.limits, dt);
  for (auto& o : next.obstacles) o.position = o.position + o.velocity * dt;
  for (auto& p : next.participants) p = step_participant(p, world.script, world.limits, dt);
  return next;
}

// ---------------------------------------------------------------- footprints

Polygon ego_polygon(const VehicleState& ego, const VehicleLimits& limits, double inflate) {
  return box_polygon(ego.pose(), limits.length + 2.0 * inflate, limits.width + 2.0 * inflate);
}

Polygon participant_polygon(const ParticipantState& p) {
  return box_polygon({p.position, p.heading()}, p.footprint.length, p.footprint.width);
}

Polygon obstacle_polygon(const Obstacle& o) {
  switch (o.shape.kind) {
    case ShapeKind::circle: return ellipse_polygon(o.position, o.shape.a, o.shape.a, 32);
    case ShapeKind::ellipse: return ellipse_polygon(o.position, o.shape.a, o.shape.b, 32);
    case ShapeKind::rectangle: return box_polygon({o.position, 0.0}, o.shape.a, o.shape.b);
  }
  return {};
}

namespace {

double bounding_radius(ParticipantKind, const Footprint& f) { return 0.5 * std::hypot(f.length, f.width); }

double bounding_radius(const ObstacleShape& s) {
  switch (s.kind) {
    case ShapeKind::circle: return s.a;
    case ShapeKind::ellipse: return std::max(s.a, s.b);
    case ShapeKind::rectangle: return 0.5 * std::hypot(s.a, s.b);
  }
  return 0.0;
}

}  // namespace

ImpactZone classify_zone(const VehicleState& ego, Vec2 contact_world) {
  const Vec2 local = to_local(ego.pose(), contact_world);
  const double bearing = std::abs(std::atan2(local.y, local.x)) * 180.0 / kPi;
  if (bearing < 45.0) return ImpactZone::front;
  if (bearing > 135.0) return ImpactZone::rear;
  return ImpactZone::side;
}

ImpactReport check_impact(const WorldState& frame, double ego_inflate) {
  const Polygon ego = ego_polygon(frame.ego, frame.limits, ego_inflate);
  const double ego_r = 0.5 * std::hypot(frame.limits.length + 2 * ego_inflate, frame.limits.width + 2 * ego_inflate);
  const Vec2 ego_v = frame.ego.velocity();

  auto report = [&](const Polygon& other, Vec2 other_v, const std::string& id) {
    ImpactReport r;
    r.occurred = true;
    r.zone = classify_zone(frame.ego, contact_point(ego, other));
    r.rel_speed = (other_v - ego_v).norm();
    r.agent_id = id;
    r.time = frame.time;
    return r;
  };

  for (const auto& p : frame.participants) {
    if ((p.position - frame.ego.position).norm() > ego_r + bounding_radius(p.kind, p.footprint)) continue;
    const Polygon poly = participant_polygon(p);
    if (polygons_overlap(ego, poly)) return report(poly, p.velocity, p.id);
  }
  for (const auto& o : frame.obstacles) {
    if ((o.position - frame.ego.position).norm() > ego_r + bounding_radius(o.shape)) continue;
    const Polygon poly = obstacle_polygon(o);
    if (polygons_overlap(ego, poly)) return report(poly, o.velocity, o.id);
  }
  return {};
}

ImpactReport detect_impact(std::span<const WorldState> frames, double ego_inflate) {
  for (const auto& f : frames) {
    ImpactReport r = check_impact(f, ego_inflate);
    if (r.occurred) return r;
  }
  return {};
}

namespace {

/// Constant-velocity extrapolation of ego and agents, without scripts.
WorldState extrapolate(const WorldState& w, double t) {
  WorldState out = w;
  out.time = w.time + t;
  out.ego.position = w.ego.position + w.ego.velocity() * t;
  for (auto& o : out.obstacles) o.position = o.position + o.velocity * t;
  for (auto& p : out.participants) p.position = p.position + p.velocity * t;
  return out;
}

bool any_overlap(const WorldState& w, std::string* id) {
  const ImpactReport r = check_impact(w);
  if (r.occurred && id) *id = r.agent_id;
  return r.occurred;
}

}  // namespace

std::optional<HazardContact> hazard_ttc(const WorldState& world, double horizon, double probe_dt) {
  std::string id;
  if (any_overlap(world, &id)) return HazardContact{0.0, id};
  double prev = 0.0;
  for (double t = probe_dt; t <= horizon + 1e-12; t += probe_dt) {
    if (any_overlap(extrapolate(world, t), &id)) {
      double lo = prev, hi = t;
      for (int i = 0; i < 20; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (any_overlap(extrapolate(world, mid), nullptr))
          hi = mid;
        else
          lo = mid;
      }
      any_overlap(extrapolate(world, hi), &id);
      return HazardContact{hi, id};
    }
    prev = t;
  }
  return std::nullopt;
}

}  // namespace saca
