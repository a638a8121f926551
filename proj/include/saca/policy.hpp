#ifndef SACA_POLICY_HPP
#define SACA_POLICY_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "saca/labels.hpp"
#include "saca/scenario.hpp"
#include "saca/world.hpp"

namespace saca::policy {

struct TrajectorySample {
  double t{0.0};
  Vec2 position;
  double heading{0.0};
  double speed{0.0};
  double course{0.0};  // direction of travel; differs from heading while drifting
};

enum class Terminal { stopped, lane_changed, perpendicular, continuing };

std::string_view terminal_name(Terminal t);

struct TrajectoryTemplate {
  PolicyId policy{PolicyId::NI};
  double dt{0.05};
  std::vector<TrajectorySample> samples;
  Terminal terminal{Terminal::continuing};

  /// Linear interpolation between samples; holds the last sample beyond the end.
  TrajectorySample at(double t) const;
};

struct GenerateOptions {
  double dt{0.05};
  double duration{4.0};
  double lateral_time{1.5};        // lane shift duration for AES / ES-B
  double drift_time{1.2};          // heading ramp duration for T-drift
  double drift_course_deg{45.0};   // course deviation reached during the drift
  double esb_decel{6.0};
  double target_speed{0.0};        // ES-B speed floor
  std::optional<double> lateral_width;  // defaults to the lane width
};

/// Samples the policy's motion from the given ego state. Throws
/// std::invalid_argument for a stationary ego with an intervening policy.
TrajectoryTemplate generate(PolicyId policy, const VehicleState& ego, const RoadTopology& road,
                            const VehicleLimits& limits = {}, const GenerateOptions& options = {});

enum class Clause { none, road_bounds, occupied_lane, collision };

std::string_view clause_name(Clause c);

struct Validation {
  bool ok{true};
  Clause clause{Clause::none};
  std::string reason;
};

inline constexpr double kRoadMargin = 0.3;

/// Checks, in order: road bounds with kRoadMargin, a free target lane for
/// policies 1-4, and footprint overlap with the forecast agents propagated by
/// their intentions alongside the template. The template must be expressed in
/// the forecast's ego frame.
Validation validate(const TrajectoryTemplate& tmpl, const ScenarioSnapshot& forecast);

/// 0.5 for policies 0-4, 1.0 for 5-6, 0 for 7.
double trigger_severity(PolicyId p);

/// Writes "t,x,y,heading,speed" rows.
void export_csv(const TrajectoryTemplate& tmpl, std::ostream& out);

}  // namespace saca::policy

#endif
