#ifndef SACA_SCENE_CONFIG_HPP
#define SACA_SCENE_CONFIG_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "saca/world.hpp"

namespace saca {

/// Edits that turn a risk scene into its no-risk twin (hazard removed or
/// defused), used by the false-trigger protocol.
struct NoRiskEdit {
  std::vector<std::string> remove_obstacles;
  std::vector<std::string> remove_participants;
  std::map<std::string, Intention> intentions;
};

/// A named scenario. Files are JSON, schema version 1:
///
///   {
///     "version": 1, "name": "...", "family": "intersection" | "one_way",
///     "duration_s": 10.0, "speed_jitter_mps": 0.0,
///     "jitter_participants": ["<id>", ..],  // move with the ego's speed offset
///     "road": {"kind": "intersection" | "one_way_multilane",
///              "left_bound_m": .., "right_bound_m": .., "lane_width_m": ..},
///     "scene": <scene>,            // state at t = 0
///     "reference_scene": <scene>,  // optional documented snapshot
///     "no_risk": {"remove_obstacles": [..], "remove_participants": [..],
///                 "intentions": {"<id>": "FB", ..}}
///   }
///
///   <scene> = {
///     "ego": {"speed": 14.0, "heading": 0.0, "position": [0, 0]},
///     "obstacles": [{"id": "obs1", "shape": "ellipse", "a": 3.5, "b": 1.75,
///                    "position": [66, 0], "velocity": [0, 0]}],
///     "participants": [{"id": "object1", "kind": "large_truck",
///                       "position": [x, y], "velocity": [vx, vy],
///                       "intention": "M", "length": .., "width": ..}]
///   }
///
/// Positions are meters in the ego frame at t = 0 (x forward, y left).
struct SceneConfig {
  std::string name;
  std::string family;
  double duration_s{10.0};
  double speed_jitter_mps{0.0};
  std::vector<std::string> jitter_participants;  // share the ego's speed offset
  WorldState initial;
  std::optional<WorldState> reference;
  NoRiskEdit no_risk;
};

/// Throws std::runtime_error on malformed input.
SceneConfig parse_scene_config(const std::string& text);
SceneConfig load_scene_config(const std::filesystem::path& path);

/// Initial world with the no-risk edits applied.
WorldState no_risk_world(const SceneConfig& cfg);

/// Directory holding the shipped configs; overridable with SACA_CONFIG_DIR.
std::filesystem::path default_config_dir();
/// Resolves a config name ("intersection", "one_way") or a path.
std::filesystem::path resolve_config(const std::string& name_or_path);

}  // namespace saca

#endif
