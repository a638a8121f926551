#include "saca/scene_config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#ifndef SACA_DEFAULT_CONFIG_DIR
#define SACA_DEFAULT_CONFIG_DIR "configs"
#endif

namespace saca {

using nlohmann::json;

namespace {

Vec2 vec(const json& j, const char* key, Vec2 fallback = {}) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 2) throw std::runtime_error(std::string("expected [x, y] for ") + key);
  return {a[0].get<double>(), a[1].get<double>()};
}

RoadTopology parse_road(const json& j) {
  RoadTopology r;
  const std::string kind = j.value("kind", "one_way_multilane");
  if (kind == "intersection")
    r.kind = RoadKind::intersection;
  else if (kind == "one_way_multilane")
    r.kind = RoadKind::one_way_multilane;
  else
    throw std::runtime_error("unknown road kind: " + kind);
  r.left_bound_m = j.value("left_bound_m", r.left_bound_m);
  r.right_bound_m = j.value("right_bound_m", r.right_bound_m);
  r.lane_width_m = j.value("lane_width_m", r.lane_width_m);
  if (!(r.left_bound_m > 0.0 && r.right_bound_m > 0.0 && r.lane_width_m > 0.0))
    throw std::runtime_error("road bounds must be positive");
  return r;
}

WorldState parse_scene(const json& j, const RoadTopology& road) {
  WorldState w;
  w.road = road;
  const json& e = j.at("ego");
  w.ego.position = vec(e, "position");
  w.ego.heading = e.value("heading", 0.0);
  w.ego.speed = e.at("speed").get<double>();
  if (w.ego.speed < 0.0) throw std::runtime_error("ego speed must be >= 0");

  for (const json& o : j.value("obstacles", json::array())) {
    Obstacle ob;
    ob.id = o.at("id").get<std::string>();
    const auto kind = parse_shape(o.at("shape").get<std::string>());
    if (!kind) throw std::runtime_error("unknown obstacle shape for " + ob.id);
    ob.shape.kind = *kind;
    ob.shape.a = o.at("a").get<double>();
    ob.shape.b = o.value("b", ob.shape.a);
    if (*kind == ShapeKind::circle) ob.shape.b = ob.shape.a;
    if (!ob.shape.valid()) throw std::runtime_error("obstacle extents must be positive: " + ob.id);
    ob.position = vec(o, "position");
    ob.velocity = vec(o, "velocity");
    w.obstacles.push_back(ob);
  }

  for (const json& p : j.value("participants", json::array())) {
    ParticipantState ps;
    ps.id = p.at("id").get<std::string>();
    const auto kind = parse_kind(p.at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("unknown participant kind for " + ps.id);
    ps.kind = *kind;
    ps.footprint = default_footprint(ps.kind);
    ps.footprint.length = p.value("length", ps.footprint.length);
    ps.footprint.width = p.value("width", ps.footprint.width);
    ps.position = vec(p, "position");
    ps.velocity = vec(p, "velocity");
    const std::string label = p.value("intention", "M");
    const auto intention = parse_intention(label);
    if (!intention) throw std::runtime_error("unknown intention label: " + label);
    ps.intention = *intention;
    const double speed = ps.velocity.norm();
    if (p.contains("travel_dir")) {
      const Vec2 d = vec(p, "travel_dir");
      ps.travel_dir = d * (1.0 / d.norm());
    } else if (speed > 1e-9) {
      ps.travel_dir = ps.velocity * (1.0 / speed);
    }
    if (ps.kind == ParticipantKind::pedestrian && speed > w.limits.pedestrian_speed_max)
      throw std::runtime_error("pedestrian speed above limit: " + ps.id);
    w.participants.push_back(ps);
  }
  return w;
}

}  // namespace

SceneConfig parse_scene_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw std::runtime_error(std::string("scene config: ") + ex.what());
  }
  try {
    if (j.value("version", 1) != 1) throw std::runtime_error("unsupported scene config version");
    SceneConfig cfg;
    cfg.name = j.value("name", "unnamed");
    cfg.family = j.value("family", cfg.name);
    cfg.duration_s = j.value("duration_s", cfg.duration_s);
    cfg.speed_jitter_mps = j.value("speed_jitter_mps", 0.0);
    cfg.jitter_participants = j.value("jitter_participants", std::vector<std::string>{});
    const RoadTopology road = parse_road(j.at("road"));
    cfg.initial = parse_scene(j.at("scene"), road);
    if (j.contains("reference_scene")) cfg.reference = parse_scene(j.at("reference_scene"), road);
    if (j.contains("no_risk")) {
      const json& n = j.at("no_risk");
      cfg.no_risk.remove_obstacles = n.value("remove_obstacles", std::vector<std::string>{});
      cfg.no_risk.remove_participants = n.value("remove_participants", std::vector<std::string>{});
      const json intentions = n.value("intentions", json::object());
      for (const auto& [id, label] : intentions.items()) {
        const auto i = parse_intention(label.get<std::string>());
        if (!i) throw std::runtime_error("unknown intention label in no_risk: " + id);
        cfg.no_risk.intentions[id] = *i;
      }
    }
    return cfg;
  } catch (const json::exception& ex) {
    throw std::runtime_error(std::string("scene config: ") + ex.what());
  }
}

SceneConfig load_scene_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene_config(ss.str());
}

WorldState no_risk_world(const SceneConfig& cfg) {
  WorldState w = cfg.initial;
  const auto& edit = cfg.no_risk;
  std::erase_if(w.obstacles, [&](const Obstacle& o) {
    return std::find(edit.remove_obstacles.begin(), edit.remove_obstacles.end(), o.id) != edit.remove_obstacles.end();
  });
  std::erase_if(w.participants, [&](const ParticipantState& p) {
    return std::find(edit.remove_participants.begin(), edit.remove_participants.end(), p.id) !=
           edit.remove_participants.end();
  });
  for (auto& p : w.participants)
    if (auto it = edit.intentions.find(p.id); it != edit.intentions.end()) p.intention = it->second;
  return w;
}

std::filesystem::path default_config_dir() {
  if (const char* env = std::getenv("SACA_CONFIG_DIR")) return env;
  return SACA_DEFAULT_CONFIG_DIR;
}

std::filesystem::path resolve_config(const std::string& name_or_path) {
  std::filesystem::path p(name_or_path);
  if (std::filesystem::exists(p)) return p;
  std::filesystem::path named = default_config_dir() / (name_or_path + ".json");
  if (std::filesystem::exists(named)) return named;
  throw std::runtime_error("unknown scene config: " + name_or_path);
}

}  // namespace saca
