#include "saca/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace saca::policy {

namespace {

constexpr int kSubsteps = 10;

struct Motion {
  Vec2 velocity;   // local frame
  double heading;  // local frame
  double speed;
};

template <typename F>
std::vector<TrajectorySample> integrate(F motion, const GenerateOptions& o) {
  const auto n = static_cast<std::size_t>(std::llround(o.duration / o.dt));
  std::vector<TrajectorySample> out;
  out.reserve(n + 1);
  Vec2 pos;
  const double h = o.dt / kSubsteps;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * o.dt;
    const Motion m = motion(t);
    const double course = m.speed > 0.0 ? std::atan2(m.velocity.y, m.velocity.x) : m.heading;
    out.push_back({t, pos, m.heading, m.speed, course});
    if (k == n) break;
    for (int s = 0; s < kSubsteps; ++s) {
      const double tm = t + (s + 0.5) * h;
      pos = pos + motion(tm).velocity * h;
    }
  }
  return out;
}

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

int side_of(PolicyId p) {
  switch (p) {
    case PolicyId::AES_L:
    case PolicyId::ES_B_L:
    case PolicyId::T_D_L:
      return 1;
    case PolicyId::AES_R:
    case PolicyId::ES_B_R:
    case PolicyId::T_D_R:
      return -1;
    default:
      return 0;
  }
}

// Lateral velocity of the cosine lane-shift profile.
double shift_rate(double t, double width, double duration) {
  if (t >= duration) return 0.0;
  return width * kPi / (2.0 * duration) * std::sin(kPi * t / duration);
}

}  // namespace

std::string_view terminal_name(Terminal t) {
  switch (t) {
    case Terminal::stopped: return "stopped";
    case Terminal::lane_changed: return "lane_changed";
    case Terminal::perpendicular: return "perpendicular";
    case Terminal::continuing: return "continuing";
  }
  return "?";
}

std::string_view clause_name(Clause c) {
  switch (c) {
    case Clause::none: return "none";
    case Clause::road_bounds: return "road-bounds";
    case Clause::occupied_lane: return "occupied-lane";
    case Clause::collision: return "collision";
  }
  return "?";
}

TrajectorySample TrajectoryTemplate::at(double t) const {
  if (samples.empty()) throw std::logic_error("TrajectoryTemplate::at on empty template");
  if (t <= 0.0) return samples.front();
  const double u = t / dt;
  const auto i = static_cast<std::size_t>(std::floor(u));
  if (i + 1 >= samples.size()) return samples.back();
  const double f = u - static_cast<double>(i);
  const TrajectorySample& a = samples[i];
  const TrajectorySample& b = samples[i + 1];
  if (f < 1e-9) return a;
  return {t, a.position * (1.0 - f) + b.position * f, a.heading + wrap_angle(b.heading - a.heading) * f,
          a.speed * (1.0 - f) + b.speed * f, a.course + wrap_angle(b.course - a.course) * f};
}

TrajectoryTemplate generate(PolicyId policy, const VehicleState& ego, const RoadTopology& road,
                            const VehicleLimits& limits, const GenerateOptions& o) {
  const int id = to_int(policy);
  if (id < 0 || id >= kPolicyCount) throw std::invalid_argument("generate: invalid policy id");
  if (!(o.dt > 0.0) || !(o.duration > 0.0)) throw std::invalid_argument("generate: dt and duration must be positive");
  const double v0 = ego.speed;
  if (policy != PolicyId::NI && !(v0 > 0.0)) throw std::invalid_argument("generate: ego must be moving");

  const double side = side_of(policy);
  const double width = o.lateral_width.value_or(road.lane_width_m);
  TrajectoryTemplate tmpl;
  tmpl.policy = policy;
  tmpl.dt = o.dt;

  switch (policy) {
    case PolicyId::AEB: {
      const double a = limits.brake_max;
      tmpl.samples = integrate([&](double t) {
        const double v = std::max(0.0, v0 - a * t);
        return Motion{{v, 0.0}, 0.0, v};
      }, o);
      tmpl.terminal = Terminal::stopped;
      break;
    }
    case PolicyId::AES_L:
    case PolicyId::AES_R:
    case PolicyId::ES_B_L:
    case PolicyId::ES_B_R: {
      const bool brake = policy == PolicyId::ES_B_L || policy == PolicyId::ES_B_R;
      tmpl.samples = integrate([&](double t) {
        const double v = brake ? std::max(o.target_speed, v0 - o.esb_decel * t) : v0;
        const double vy = side * std::min(shift_rate(t, width, o.lateral_time), v);
        const double vx = std::sqrt(std::max(0.0, v * v - vy * vy));
        return Motion{{vx, vy}, v > 0.0 ? std::atan2(vy, vx) : 0.0, v};
      }, o);
      tmpl.terminal = Terminal::lane_changed;
      break;
    }
    case PolicyId::T_D_L:
    case PolicyId::T_D_R: {
      const double a = limits.brake_max;
      const double course = o.drift_course_deg * kPi / 180.0;
      tmpl.samples = integrate([&](double t) {
        const double v = std::max(0.0, v0 - a * t);
        const double u = std::min(1.0, t / o.drift_time);
        const double chi = side * course * u;
        return Motion{{v * std::cos(chi), v * std::sin(chi)}, side * (kPi / 2.0) * smoothstep(u), v};
      }, o);
      tmpl.terminal = Terminal::perpendicular;
      break;
    }
    case PolicyId::NI:
      tmpl.samples = integrate([&](double) { return Motion{{v0, 0.0}, 0.0, v0}; }, o);
      tmpl.terminal = Terminal::continuing;
      break;
  }

  const Pose frame = ego.pose();
  for (TrajectorySample& s : tmpl.samples) {
    s.position = frame.position + rotate(s.position, frame.heading);
    s.heading = s.heading + frame.heading;
    s.course = s.course + frame.heading;
  }
  return tmpl;
}

Validation validate(const TrajectoryTemplate& tmpl, const ScenarioSnapshot& forecast) {
  const VehicleLimits& lim = forecast.limits;
  const RoadTopology& road = forecast.road;
  const Vec2 shift{0.0, forecast.lane_offset};
  const double hi = road.left_bound_m - kRoadMargin;
  const double lo = -road.right_bound_m + kRoadMargin;

  for (const TrajectorySample& s : tmpl.samples) {
    for (Vec2 c : box_polygon({s.position + shift, s.heading}, lim.length, lim.width)) {
      if (c.y > hi || c.y < lo) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "road-bounds: footprint at y=%.2f m leaves [%.2f, %.2f] at t=%.2f s", c.y, lo,
                      hi, s.t);
        return {false, Clause::road_bounds, buf};
      }
    }
  }

  const int id = to_int(tmpl.policy);
  const bool lane_change = id >= 1 && id <= 4;
  const double side = (id == 1 || id == 3) ? 1.0 : -1.0;
  const double w = road.lane_width_m;
  const double band_lo = side * w - 0.5 * w;
  const double band_hi = side * w + 0.5 * w;

  WorldState world = to_world(forecast);
  for (std::size_t k = 0; k < tmpl.samples.size(); ++k) {
    const TrajectorySample& s = tmpl.samples[k];
    if (k > 0) world = step(world, s.t - tmpl.samples[k - 1].t);
    const Vec2 ego_pos = s.position + shift;

    if (lane_change) {
      for (const ParticipantState& p : world.participants) {
        if (p.kind == ParticipantKind::pedestrian) continue;
        double ymin = 1e9, ymax = -1e9, xmin = 1e9, xmax = -1e9;
        for (Vec2 c : participant_polygon(p)) {
          ymin = std::min(ymin, c.y);
          ymax = std::max(ymax, c.y);
          xmin = std::min(xmin, c.x);
          xmax = std::max(xmax, c.x);
        }
        const double reach = lim.length + 6.0;
        if (ymax > band_lo && ymin < band_hi && xmax > ego_pos.x - reach && xmin < ego_pos.x + reach) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "occupied-lane: %s occupies the target lane near the ego at t=%.2f s",
                        p.id.c_str(), s.t);
          return {false, Clause::occupied_lane, buf};
        }
      }
    }

    const Polygon ego_poly = box_polygon({ego_pos, s.heading}, lim.length, lim.width);
    auto hit = [&](const Polygon& other, const std::string& who) -> std::optional<Validation> {
      if (!polygons_overlap(ego_poly, other)) return std::nullopt;
      char buf[160];
      std::snprintf(buf, sizeof buf, "collision: footprint overlaps %s at t=%.2f s", who.c_str(), s.t);
      return Validation{false, Clause::collision, buf};
    };
    for (const ParticipantState& p : world.participants)
      if (auto v = hit(participant_polygon(p), p.id)) return *v;
    for (const Obstacle& ob : world.obstacles)
      if (auto v = hit(obstacle_polygon(ob), ob.id)) return *v;
  }
  return {};
}

double trigger_severity(PolicyId p) {
  const int id = to_int(p);
  if (id >= 0 && id <= 4) return 0.5;
  if (id == 5 || id == 6) return 1.0;
  if (id == 7) return 0.0;
  throw std::invalid_argument("trigger_severity: invalid policy id");
}

void export_csv(const TrajectoryTemplate& tmpl, std::ostream& out) {
  out << "t,x,y,heading,speed\n";
  char buf[160];
  for (const TrajectorySample& s : tmpl.samples) {
    std::snprintf(buf, sizeof buf, "%.3f,%.6f,%.6f,%.6f,%.6f\n", s.t, s.position.x, s.position.y, s.heading, s.speed);
    out << buf;
  }
}

}  // namespace saca::policy
