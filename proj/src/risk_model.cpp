#include "saca/risk_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace saca {

namespace {

reach::Axis spaced_axis(double lo, double hi, double spacing) {
  const auto cells = static_cast<std::size_t>(std::ceil((hi - lo) / spacing)) + 1;
  return {lo, hi, std::max<std::size_t>(cells, 2)};
}

double bounding_radius(const ObstacleShape& s) {
  switch (s.kind) {
    case ShapeKind::circle:
      return s.a;
    case ShapeKind::ellipse:
      return std::max(s.a, s.b);
    case ShapeKind::rectangle:
      return 0.5 * std::hypot(s.a, s.b);
  }
  return s.a;
}

}  // namespace

RelativeGridSpec default_relative_spec(const ObstacleShape& shape, const VehicleLimits& limits) {
  if (!shape.valid()) throw std::invalid_argument("default_relative_spec: invalid shape");
  const double r = bounding_radius(shape);
  RelativeGridSpec spec;
  spec.axes = {
      spaced_axis(-r - 6.0, r + 30.0, 1.5),
      spaced_axis(-r - 6.0, r + 6.0, 1.0),
      reach::Axis{0.0, 16.0, 5},
      reach::Axis{-0.6, 0.6, 5},
  };
  spec.actions.clear();
  for (double steer : {-0.3, 0.0, 0.3})
    for (double accel : {-limits.brake_max, 0.0, limits.drive_max}) spec.actions.push_back({steer, accel});
  spec.wheelbase = limits.wheelbase;
  return spec;
}

reach::Dynamics relative_dynamics(const RelativeGridSpec& spec) {
  const double dt = spec.dt;
  const double wheelbase = spec.wheelbase;
  const double v_max = spec.axes.at(2).max;
  return [dt, wheelbase, v_max](const reach::State& s, const reach::Action& u) {
    const double v = s[2];
    const double psi = s[3];
    reach::State n = s;
    n[0] = s[0] - v * std::cos(psi) * dt;
    n[1] = s[1] - v * std::sin(psi) * dt;
    n[2] = std::clamp(v + u.accel * dt, 0.0, v_max);
    n[3] = psi + v / wheelbase * std::tan(u.steer) * dt;
    return n;
  };
}

reach::SafetyFunction relative_safety(const ObstacleShape& shape) {
  Obstacle centered;
  centered.shape = shape;
  return [centered](const reach::State& s) { return h_value(Vec2{-s[0], -s[1]}, centered); };
}

double RiskSurface::risk_at(Vec2 ego_offset, double speed, double heading) const {
  const reach::State s{-ego_offset.x, -ego_offset.y, speed, heading, 0.0};
  return reach::normalize_risk(reach::query_v(grid, s).value, params);
}

RiskSurface solve_surface(const ObstacleShape& shape, const RelativeGridSpec& spec,
                          const reach::SolveOptions& options) {
  reach::ReachabilityGrid grid(spec.axes, spec.actions, spec.gamma);
  const reach::SolveReport report = reach::solve(grid, relative_dynamics(spec), relative_safety(shape), options);
  const reach::RiskParams params = reach::percentile_anchors(grid);
  return RiskSurface{shape, std::move(grid), params, report.iterations};
}

RiskField risk_field(const RiskSurface& surface, const RiskSlice& slice) {
  if (slice.nx < 2 || slice.ny < 2) throw std::invalid_argument("risk_field: need at least 2 samples per axis");
  RiskField f;
  for (std::size_t i = 0; i < slice.nx; ++i)
    f.xs.push_back(slice.x_min + (slice.x_max - slice.x_min) * static_cast<double>(i) / static_cast<double>(slice.nx - 1));
  for (std::size_t j = 0; j < slice.ny; ++j)
    f.ys.push_back(slice.y_min + (slice.y_max - slice.y_min) * static_cast<double>(j) / static_cast<double>(slice.ny - 1));
  f.values.reserve(slice.nx * slice.ny);
  for (double y : f.ys)
    for (double x : f.xs) f.values.push_back(surface.risk_at({x, y}, slice.speed, slice.heading));
  return f;
}

std::string shape_cache_key(const ObstacleShape& shape) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s-%.3f-%.3f", std::string(shape_key(shape.kind)).c_str(), shape.a, shape.b);
  return buf;
}

RiskModel::RiskModel(RiskModelOptions options) : options_(std::move(options)) {}

std::shared_ptr<const RiskSurface> RiskModel::surface(const ObstacleShape& shape, const VehicleLimits& limits) {
  const std::string key = shape_cache_key(shape);
  std::lock_guard lock(mutex_);
  if (auto it = surfaces_.find(key); it != surfaces_.end()) return it->second;

  const RelativeGridSpec spec = default_relative_spec(shape, limits);
  std::shared_ptr<const RiskSurface> result;
  std::filesystem::path file;
  if (options_.cache_dir) {
    file = *options_.cache_dir / ("grid-" + key + ".txt");
    if (std::ifstream in(file); in) {
      reach::ReachabilityGrid grid = reach::load_grid(in);
      const reach::RiskParams params = reach::percentile_anchors(grid);
      result = std::make_shared<const RiskSurface>(RiskSurface{shape, std::move(grid), params, 0});
    }
  }
  if (!result) {
    result = std::make_shared<const RiskSurface>(solve_surface(shape, spec, options_.solve));
    ++solves_;
    if (options_.cache_dir) {
      std::filesystem::create_directories(*options_.cache_dir);
      std::ofstream out(file);
      if (!out) throw std::runtime_error("cannot write grid cache: " + file.string());
      reach::save_grid(result->grid, out);
    }
  }
  surfaces_.emplace(key, result);
  return result;
}

double RiskModel::risk(const Obstacle& obstacle, const VehicleState& ego, const VehicleLimits& limits) {
  const auto s = surface(obstacle.shape, limits);
  const Vec2 offset = ego.position - obstacle.position;
  const double speed = std::max(0.0, ego.speed - obstacle.velocity.dot(rotate({1.0, 0.0}, ego.heading)));
  return s->risk_at(offset, speed, wrap_angle(ego.heading));
}

void RiskModel::fill(WorldState& world) {
  for (Obstacle& o : world.obstacles) o.risk = risk(o, world.ego, world.limits);
}

std::size_t RiskModel::solves() const {
  std::lock_guard lock(mutex_);
  return solves_;
}

RiskModel& shared_risk_model() {
  static RiskModel model = [] {
    RiskModelOptions opts;
    if (const char* dir = std::getenv("SACA_GRID_CACHE")) opts.cache_dir = dir;
    return RiskModel(opts);
  }();
  return model;
}

}  // namespace saca
