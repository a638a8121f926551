#include "saca/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace saca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Avoids printing "-0.0".
double tidy(double v, double step = 0.1) {
  const double r = std::round(v / step) * step;
  return r == 0.0 ? 0.0 : r;
}

std::string road_phrase(const RoadTopology& r) {
  if (r.kind == RoadKind::intersection) return "Intersection";
  return fmt("One-way multi-lane road (left boundary %.1f m, right boundary %.1f m, lane width %.1f m)",
             tidy(r.left_bound_m), tidy(r.right_bound_m), tidy(r.lane_width_m));
}

std::string position_phrase(const char* subject, Vec2 p) {
  const double fwd = tidy(p.x);
  const double left = tidy(p.y);
  return fmt("The %s is %.1f m %s the vehicle and %.1f m to the %s.", subject, std::abs(fwd),
             fwd < 0.0 ? "behind" : "in front of", std::abs(left), left < 0.0 ? "right" : "left");
}

std::string motion_phrase(Vec2 v) {
  const double speed = tidy(v.norm());
  if (speed == 0.0) return "The participant is stationary.";
  const char* dir = nullptr;
  if (std::abs(v.y) >= std::abs(v.x))
    dir = v.y > 0.0 ? "to the left" : "to the right";
  else
    dir = v.x > 0.0 ? "forward" : "backward";
  return fmt("The participant is moving %s at a speed of %.1f m/s.", dir, speed);
}

std::string shape_phrase(const ObstacleShape& s) {
  switch (s.kind) {
    case ShapeKind::ellipse:
      return fmt("ellipse (major radius %.1f m, minor radius %.1f m)", tidy(s.a), tidy(s.b));
    case ShapeKind::circle:
      return fmt("circle (radius %.1f m)", tidy(s.a));
    case ShapeKind::rectangle:
      return fmt("rectangle (length %.1f m, width %.1f m)", tidy(s.a), tidy(s.b));
  }
  return "unknown";
}

ScenarioSnapshot quantized(const ScenarioSnapshot& s) {
  ScenarioSnapshot q = s;
  q.ego.speed = tidy(s.ego.speed);
  for (Obstacle& o : q.obstacles) {
    o.position = {tidy(o.position.x), tidy(o.position.y)};
    o.velocity = {tidy(o.velocity.x), tidy(o.velocity.y)};
    o.risk = tidy(o.risk, 0.01);
  }
  for (ParticipantState& p : q.participants) {
    p.position = {tidy(p.position.x), tidy(p.position.y)};
    p.velocity = {tidy(p.velocity.x), tidy(p.velocity.y)};
  }
  return q;
}

double clamp1(double v) { return std::clamp(v, -1.0, 1.0); }

struct SlotKey {
  double ttc;
  double dist;
  std::string id;
  std::size_t index;
  bool operator<(const SlotKey& o) const {
    if (ttc != o.ttc) return ttc < o.ttc;
    if (dist != o.dist) return dist < o.dist;
    return id < o.id;
  }
};

}  // namespace

ScenarioSnapshot make_snapshot(const WorldState& world) {
  ScenarioSnapshot s;
  s.timestamp = world.time;
  s.road = world.road;
  s.limits = world.limits;
  s.script = world.script;
  s.lane_offset = world.ego.position.y;
  s.ego = world.ego;
  s.ego.position = {};
  s.ego.heading = 0.0;
  const Pose frame = world.ego.pose();
  for (Obstacle o : world.obstacles) {
    o.position = to_local(frame, o.position);
    o.velocity = to_local_dir(frame, o.velocity);
    s.obstacles.push_back(o);
  }
  for (ParticipantState p : world.participants) {
    p.position = to_local(frame, p.position);
    p.velocity = to_local_dir(frame, p.velocity);
    p.travel_dir = to_local_dir(frame, p.travel_dir);
    s.participants.push_back(p);
  }
  return s;
}

WorldState to_world(const ScenarioSnapshot& s) {
  WorldState w;
  w.time = s.timestamp;
  w.road = s.road;
  w.limits = s.limits;
  w.script = s.script;
  w.ego = s.ego;
  w.ego.position = {0.0, s.lane_offset};
  w.ego.heading = 0.0;
  const Vec2 shift{0.0, s.lane_offset};
  for (Obstacle o : s.obstacles) {
    o.position = o.position + shift;
    w.obstacles.push_back(o);
  }
  for (ParticipantState p : s.participants) {
    p.position = p.position + shift;
    w.participants.push_back(p);
  }
  return w;
}

double agent_contact_time(const ScenarioSnapshot& s, const std::string& agent_id, double horizon) {
  WorldState w = to_world(s);
  std::erase_if(w.obstacles, [&](const Obstacle& o) { return o.id != agent_id; });
  std::erase_if(w.participants, [&](const ParticipantState& p) { return p.id != agent_id; });
  const auto hit = hazard_ttc(w, horizon);
  return hit ? hit->ttc : kInf;
}

std::array<ScenarioSnapshot, 3> forecast(const ScenarioSnapshot& s, double t1, double dt) {
  if (!(t1 > 0.0)) throw std::invalid_argument("forecast: horizon must be positive");
  const WorldState base = to_world(s);
  const auto hazard = hazard_ttc(base);
  const double delta = hazard ? std::max(0.0, hazard->ttc - t1) : 0.0;

  auto propagate = [&](WorldState w) {
    double left = delta;
    while (left > 1e-9) {
      const double h = std::min(dt, left);
      w = step(w, h);
      left -= h;
    }
    ScenarioSnapshot out = make_snapshot(w);
    out.history_refs = s.history_refs;
    // Keep the predicted labels of the source snapshot.
    for (std::size_t i = 0; i < out.participants.size(); ++i) {
      out.participants[i].confidence = s.participants[i].confidence;
      out.participants[i].ranking = s.participants[i].ranking;
    }
    return out;
  };

  const ScenarioSnapshot a = propagate(base);
  std::array<ScenarioSnapshot, 3> result{a, a, a};

  std::optional<std::size_t> branch;
  for (std::size_t i = 0; i < s.participants.size(); ++i) {
    const ParticipantState& p = s.participants[i];
    if (p.kind == ParticipantKind::pedestrian || p.confidence >= 1.0) continue;
    if (!branch || p.confidence < s.participants[*branch].confidence) branch = i;
  }
  if (!branch) return result;
  for (int h = 1; h <= 2; ++h) {
    WorldState w = base;
    w.participants[*branch].intention = s.participants[*branch].ranking[static_cast<std::size_t>(h)];
    result[static_cast<std::size_t>(h)] = propagate(w);
  }
  return result;
}

std::string to_prompt(const ScenarioSnapshot& s, std::span<const HistoricalCase> history,
                      const PromptOptions& options) {
  std::string out = "AUTONOMOUS DRIVING COLLISION AVOIDANCE SCENARIO\n";
  out += "## Ego Vehicle:\n";
  out += fmt("ID=ego, type=small car, position=(0.0, 0.0), velocity=(%.1f, 0.0), Road Topology=",
             tidy(s.ego.speed));
  out += road_phrase(s.road);
  if (tidy(s.lane_offset) != 0.0) out += fmt(", lane offset=%.1f m", tidy(s.lane_offset));
  out += "\n## Obstacles:\n";
  if (s.obstacles.empty()) out += "No static obstacles detected.\n";
  for (const Obstacle& o : s.obstacles) {
    const Vec2 rel = o.velocity - s.ego.velocity();
    out += fmt("Obstacle ID=%s, shape=", o.id.c_str()) + shape_phrase(o.shape);
    out += fmt(", velocity=(%.1f, %.1f). ", tidy(o.velocity.x), tidy(o.velocity.y));
    out += position_phrase("obstacle", o.position);
    out += fmt(" Relative speed = %.1f m/s.", tidy(rel.norm()));
    if (options.include_risk) out += fmt(" Risk = %.2f.", tidy(o.risk, 0.01));
    out += "\n";
  }
  out += "## Traffic Participants:\n";
  if (s.participants.empty()) out += "No traffic participants detected.\n";
  for (const ParticipantState& p : s.participants) {
    out += fmt("Participant ID=%s, type=%s, velocity=(%.1f, %.1f). ", p.id.c_str(),
               std::string(kind_display(p.kind)).c_str(), tidy(p.velocity.x), tidy(p.velocity.y));
    out += position_phrase("participant", p.position);
    out += " " + motion_phrase(p.velocity);
    if (options.include_intention)
      out += fmt(" Intention = %s (%s).", std::string(intention_code(p.intention)).c_str(),
                 std::string(intention_name(p.intention)).c_str());
    out += "\n";
  }
  out += "## HISTORICAL SCENARIOS:\n";
  if (history.empty()) out += "No historical data is available.\n";
  for (const HistoricalCase& h : history) {
    out += fmt("Case ID=%s, similarity=%.2f, policy=%d (%s), collision loss=%.3f, false-trigger loss=%.1f.",
               h.id.c_str(), h.similarity, to_int(h.policy), std::string(policy_name(h.policy)).c_str(),
               h.collision_loss, h.false_trigger_loss);
    if (!h.summary.empty()) out += " " + h.summary;
    out += "\n";
  }
  return out;
}

ScenarioVector encode(const ScenarioSnapshot& raw) {
  const ScenarioSnapshot s = quantized(raw);
  ScenarioVector v;
  auto& x = v.values;
  x[0] = clamp1(s.ego.speed / 30.0);
  x[1] = s.road.kind == RoadKind::intersection ? 1.0 : 0.0;
  x[2] = s.road.kind == RoadKind::one_way_multilane ? 1.0 : 0.0;

  std::vector<SlotKey> obs;
  for (std::size_t i = 0; i < s.obstacles.size(); ++i) {
    const Obstacle& o = s.obstacles[i];
    obs.push_back({agent_contact_time(s, o.id), o.position.norm(), o.id, i});
  }
  std::vector<SlotKey> parts;
  for (std::size_t i = 0; i < s.participants.size(); ++i) {
    const ParticipantState& p = s.participants[i];
    parts.push_back({agent_contact_time(s, p.id), p.position.norm(), p.id, i});
  }
  std::sort(obs.begin(), obs.end());
  std::sort(parts.begin(), parts.end());
  v.truncated = obs.size() > kScenarioSlots || parts.size() > kScenarioSlots;

  const Vec2 ego_v = s.ego.velocity();
  for (std::size_t k = 0; k < std::min(obs.size(), kScenarioSlots); ++k) {
    const Obstacle& o = s.obstacles[obs[k].index];
    double* slot = &x[3 + 4 * k];
    slot[0] = clamp1(o.position.x / 100.0);
    slot[1] = clamp1(o.position.y / 20.0);
    slot[2] = clamp1((o.velocity - ego_v).norm() / 30.0);
    slot[3] = std::clamp(o.risk, 0.0, 1.0);
  }
  for (std::size_t k = 0; k < std::min(parts.size(), kScenarioSlots); ++k) {
    const ParticipantState& p = s.participants[parts[k].index];
    double* slot = &x[3 + 4 * kScenarioSlots + 9 * k];
    slot[0] = clamp1(p.position.x / 100.0);
    slot[1] = clamp1(p.position.y / 20.0);
    slot[2] = clamp1(p.velocity.norm() / 30.0);
    slot[3 + index_of(p.intention)] = 1.0;
  }
  return v;
}

double similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.5;
  const double c = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return (1.0 + c) / 2.0;
}

}  // namespace saca
