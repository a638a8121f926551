#ifndef SACA_RISK_MODEL_HPP
#define SACA_RISK_MODEL_HPP

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "saca/reachability.hpp"
#include "saca/world.hpp"

namespace saca {

/// Relative state used by the obstacle risk grids:
///   [0] gap     obstacle.x - ego.x  [m]
///   [1] lateral obstacle.y - ego.y  [m]
///   [2] speed   ego speed toward the obstacle [m/s]
///   [3] heading ego heading in the obstacle frame [rad]
struct RelativeGridSpec {
  std::vector<reach::Axis> axes;
  std::vector<reach::Action> actions = reach::default_actions();
  double gamma{0.99};
  double dt{0.05};
  double wheelbase{2.7};
};

/// Default axes for a shape: gap [-R-6, R+30], lateral [-R-6, R+6],
/// speed [0, 16], heading [-0.6, 0.6], R the bounding radius.
RelativeGridSpec default_relative_spec(const ObstacleShape& shape, const VehicleLimits& limits = {});

reach::Dynamics relative_dynamics(const RelativeGridSpec& spec);
/// h of the ego reference point against the shape centered at the origin.
reach::SafetyFunction relative_safety(const ObstacleShape& shape);

/// A solved grid for one obstacle shape together with its normalization anchors.
struct RiskSurface {
  ObstacleShape shape;
  reach::ReachabilityGrid grid;
  reach::RiskParams params;
  int iterations{0};

  /// Normalized risk of the ego at `ego_offset` (ego minus obstacle center).
  double risk_at(Vec2 ego_offset, double speed, double heading) const;
};

RiskSurface solve_surface(const ObstacleShape& shape, const RelativeGridSpec& spec,
                          const reach::SolveOptions& options = {});

struct RiskSlice {
  double speed{8.0};
  double heading{0.0};
  double x_min{-10.0};
  double x_max{10.0};
  double y_min{-6.0};
  double y_max{6.0};
  std::size_t nx{41};
  std::size_t ny{25};
};

/// Normalized risk over a plane of ego positions relative to the obstacle;
/// values[iy * nx + ix].
struct RiskField {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> values;
  double at(std::size_t ix, std::size_t iy) const { return values[iy * xs.size() + ix]; }
};

RiskField risk_field(const RiskSurface& surface, const RiskSlice& slice);

struct RiskModelOptions {
  std::optional<std::filesystem::path> cache_dir;
  reach::SolveOptions solve;
};

/// Thread-safe lazy cache of risk surfaces keyed by obstacle shape. Surfaces
/// are read from `cache_dir` when present and written back after a solve.
class RiskModel {
 public:
  explicit RiskModel(RiskModelOptions options = {});

  std::shared_ptr<const RiskSurface> surface(const ObstacleShape& shape, const VehicleLimits& limits = {});
  double risk(const Obstacle& obstacle, const VehicleState& ego, const VehicleLimits& limits = {});
  /// Writes normalized risk into every obstacle of the world.
  void fill(WorldState& world);

  std::size_t solves() const;

 private:
  RiskModelOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const RiskSurface>> surfaces_;
  std::size_t solves_{0};
};

std::string shape_cache_key(const ObstacleShape& shape);

/// Process-wide model, configured from SACA_GRID_CACHE when set.
RiskModel& shared_risk_model();

}  // namespace saca

#endif
