#ifndef SACA_SCENARIO_HPP
#define SACA_SCENARIO_HPP

#include <array>
#include <span>
#include <string>
#include <vector>

#include "saca/labels.hpp"
#include "saca/world.hpp"

namespace saca {

/// World content at one instant expressed in the ego frame: the ego sits at
/// the origin with heading 0. `lane_offset` is the ego's lateral offset from
/// its lane center, so road bounds stay meaningful.
struct ScenarioSnapshot {
  double timestamp{0.0};
  VehicleState ego;
  RoadTopology road;
  double lane_offset{0.0};
  std::vector<Obstacle> obstacles;
  std::vector<ParticipantState> participants;
  std::vector<std::string> history_refs;
  VehicleLimits limits;
  ScriptParams script;
};

ScenarioSnapshot make_snapshot(const WorldState& world);
/// Inverse of make_snapshot up to the choice of frame: a world whose frame is the snapshot's ego frame.
WorldState to_world(const ScenarioSnapshot& s);

/// Contact time of a single agent with the ego under constant velocities, or +inf.
double agent_contact_time(const ScenarioSnapshot& s, const std::string& agent_id, double horizon = 8.0);

/// Three snapshots at the instant the hazard TTC reaches `t1`: (a) every
/// participant follows its most likely intention; (b) and (c) the least
/// confident vehicle follows its second and third ranked intention instead.
/// If there is no uncertainty to branch on, all three equal (a).
std::array<ScenarioSnapshot, 3> forecast(const ScenarioSnapshot& s, double t1, double dt = kDefaultDt);

struct HistoricalCase {
  std::string id;
  double similarity{0.0};
  PolicyId policy{PolicyId::AEB};
  double collision_loss{0.0};
  double false_trigger_loss{0.0};
  std::string summary;
};

struct PromptOptions {
  bool include_risk{true};
  bool include_intention{true};
};

std::string to_prompt(const ScenarioSnapshot& s, std::span<const HistoricalCase> history = {},
                      const PromptOptions& options = {});

inline constexpr std::size_t kScenarioSlots = 4;
inline constexpr std::size_t kScenarioDim = 3 + kScenarioSlots * 4 + kScenarioSlots * 9;

/// Layout: [ego_speed/30, intersection, one_way,
///          4 x obstacle (fwd/100, left/20, rel_speed/30, risk),
///          4 x participant (fwd/100, left/20, speed/30, intention one-hot)].
/// Slots are ordered by contact time, then distance, then id.
struct ScenarioVector {
  std::array<double, kScenarioDim> values{};
  bool truncated{false};
};

ScenarioVector encode(const ScenarioSnapshot& s);

/// (1 + cos(a, b)) / 2; 1 when both are zero vectors, 0.5 when only one is.
double similarity(std::span<const double> a, std::span<const double> b);
inline double similarity(const ScenarioVector& a, const ScenarioVector& b) { return similarity(a.values, b.values); }

}  // namespace saca

#endif
