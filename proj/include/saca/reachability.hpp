#ifndef SACA_REACHABILITY_HPP
#define SACA_REACHABILITY_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace saca::reach {

inline constexpr std::size_t kMaxDims = 5;
inline constexpr std::size_t kMaxCorners = std::size_t{1} << kMaxDims;

using State = std::array<double, kMaxDims>;

/// Uniform axis of grid nodes: node i sits at min + i * spacing().
struct Axis {
  double min{0.0};
  double max{1.0};
  std::size_t cells{2};

  double spacing() const { return cells > 1 ? (max - min) / static_cast<double>(cells - 1) : 0.0; }
  double node(std::size_t i) const { return min + spacing() * static_cast<double>(i); }
};

struct Action {
  double steer{0.0};
  double accel{0.0};
};

/// Default 3 x 3 action set: steer in {-0.3, 0, 0.3} rad, accel in {-8, 0, +3} m/s^2.
std::vector<Action> default_actions();

enum class Execution { serial, parallel };

/// Multilinear interpolation weights of a point: up to 2^dims (index, weight)
/// pairs, weights non-negative and summing to one.
struct Stencil {
  std::array<std::uint32_t, kMaxCorners> index{};
  std::array<double, kMaxCorners> weight{};
  std::size_t count{0};
  bool clamped{false};
};

/// Discretized reachability value function V_h over a box of relative states.
class ReachabilityGrid {
 public:
  ReachabilityGrid(std::vector<Axis> axes, std::vector<Action> actions, double gamma);

  std::size_t dims() const { return axes_.size(); }
  std::size_t size() const { return values_.size(); }
  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<Action>& actions() const { return actions_; }
  double gamma() const { return gamma_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  State state_of(std::size_t cell) const;
  Stencil stencil(const State& s) const;
  double interpolate(const State& s, bool* clamped = nullptr) const;

 private:
  std::vector<Axis> axes_;
  std::vector<Action> actions_;
  double gamma_;
  std::vector<std::size_t> strides_;
  std::vector<double> values_;
};

/// (1 - gamma) * h + gamma * max(h, v_next). Throws std::invalid_argument
/// unless gamma lies strictly inside (0, 1).
double bellman_backup(double h, double v_next, double gamma);

using Dynamics = std::function<State(const State&, const Action&)>;
using SafetyFunction = std::function<double(const State&)>;

/// The discounted reachability Bellman operator on a fixed grid, with the
/// successor stencils of every (cell, action) pair precomputed.
class BellmanOperator {
 public:
  BellmanOperator(const ReachabilityGrid& grid, const Dynamics& dynamics, const SafetyFunction& safety);

  /// out = B[in]; returns the sup-norm of out - in.
  double apply(std::span<const double> in, std::span<double> out, Execution exec = Execution::parallel) const;

  std::span<const double> h() const { return h_; }
  std::size_t size() const { return h_.size(); }

 private:
  std::vector<double> h_;
  std::vector<std::uint32_t> index_;
  std::vector<double> weight_;
  std::size_t corners_;
  std::size_t actions_;
  double gamma_;
};

struct SolveOptions {
  double tol{1e-4};
  int max_iterations{2000};
  Execution execution{Execution::parallel};
};

struct SolveReport {
  int iterations{0};
  double residual{0.0};
  std::vector<double> residuals;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, int iterations);
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Value iteration from V = h until the sup-norm update drops below tol.
/// Throws ConvergenceError at the iteration cap.
SolveReport solve(ReachabilityGrid& grid, const Dynamics& dynamics, const SafetyFunction& safety,
                  const SolveOptions& options = {});

struct ValueQuery {
  double value{0.0};
  bool clamped{false};
};

ValueQuery query_v(const ReachabilityGrid& grid, const State& s);
/// One Bellman backup from (s, u) against the interpolated successor value.
double query_q(const ReachabilityGrid& grid, const State& s, const Action& u, const Dynamics& dynamics,
               const SafetyFunction& safety);

struct RiskParams {
  double v_min{-1.0};
  double v_max{1.0};
  bool valid() const { return v_max > v_min; }
};

/// (v - v_min) / (v_max - v_min), clamped to [0, 1].
double normalize_risk(double v, const RiskParams& p);

/// Anchors at the given quantiles of the grid values (defaults 5th / 95th).
RiskParams percentile_anchors(const ReachabilityGrid& grid, double lo = 0.05, double hi = 0.95);

/// Text field file: "SACA-GRID 1" header, dims, axes, gamma, actions, then
/// row-major values (last axis fastest).
void save_grid(const ReachabilityGrid& grid, std::ostream& out);
ReachabilityGrid load_grid(std::istream& in);

}  // namespace saca::reach

#endif
