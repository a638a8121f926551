#include "saca/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "saca/reachability_kernels.hpp"

namespace saca::reach {

std::vector<Action> default_actions() {
  std::vector<Action> out;
  for (double steer : {-0.3, 0.0, 0.3})
    for (double accel : {-8.0, 0.0, 3.0}) out.push_back({steer, accel});
  return out;
}

ReachabilityGrid::ReachabilityGrid(std::vector<Axis> axes, std::vector<Action> actions, double gamma)
    : axes_(std::move(axes)), actions_(std::move(actions)), gamma_(gamma) {
  if (axes_.empty() || axes_.size() > kMaxDims) throw std::invalid_argument("grid: 1..5 axes required");
  if (actions_.empty()) throw std::invalid_argument("grid: action set must be nonempty");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw std::invalid_argument("grid: gamma must lie in (0, 1)");
  std::size_t total = 1;
  for (const Axis& a : axes_) {
    if (a.cells < 1 || (a.cells > 1 && !(a.max > a.min))) throw std::invalid_argument("grid: malformed axis");
    total *= a.cells;
  }
  if (total > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument("grid: too many cells");
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size() - 1; d > 0; --d) strides_[d - 1] = strides_[d] * axes_[d].cells;
  values_.assign(total, 0.0);
}

State ReachabilityGrid::state_of(std::size_t cell) const {
  State s{};
  for (std::size_t d = 0; d < axes_.size(); ++d) {
    const std::size_t i = (cell / strides_[d]) % axes_[d].cells;
    s[d] = axes_[d].node(i);
  }
  return s;
}

Stencil ReachabilityGrid::stencil(const State& s) const {
  const std::size_t dims = axes_.size();
  std::array<std::size_t, kMaxDims> lo{};
  std::array<std::size_t, kMaxDims> hi{};
  std::array<double, kMaxDims> frac{};
  Stencil st;
  for (std::size_t d = 0; d < dims; ++d) {
    const Axis& ax = axes_[d];
    if (ax.cells == 1) {
      lo[d] = hi[d] = 0;
      frac[d] = 0.0;
      continue;
    }
    double t = (s[d] - ax.min) / ax.spacing();
    const double top = static_cast<double>(ax.cells - 1);
    if (!(t >= 0.0)) {
      if (t < -1e-9 || std::isnan(t)) st.clamped = true;
      t = 0.0;
    } else if (t > top) {
      if (t > top + 1e-9) st.clamped = true;
      t = top;
    }
    const double r = std::round(t);
    if (std::abs(t - r) < 1e-9) t = r;
    auto i0 = static_cast<std::size_t>(std::floor(t));
    if (i0 >= ax.cells - 1) i0 = ax.cells - 2;
    lo[d] = i0;
    hi[d] = i0 + 1;
    frac[d] = t - static_cast<double>(i0);
  }
  st.count = std::size_t{1} << dims;
  for (std::size_t corner = 0; corner < st.count; ++corner) {
    std::size_t idx = 0;
    double w = 1.0;
    for (std::size_t d = 0; d < dims; ++d) {
      const bool upper = (corner >> d) & 1U;
      idx += (upper ? hi[d] : lo[d]) * strides_[d];
      w *= upper ? frac[d] : 1.0 - frac[d];
    }
    st.index[corner] = static_cast<std::uint32_t>(idx);
    st.weight[corner] = w;
  }
  return st;
}

double ReachabilityGrid::interpolate(const State& s, bool* clamped) const {
  const Stencil st = stencil(s);
  double v = 0.0;
  for (std::size_t k = 0; k < st.count; ++k) v += st.weight[k] * values_[st.index[k]];
  if (clamped) *clamped = st.clamped;
  return v;
}

double bellman_backup(double h, double v_next, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("bellman_backup: gamma must lie in (0, 1)");
  return (1.0 - gamma) * h + gamma * std::max(h, v_next);
}

BellmanOperator::BellmanOperator(const ReachabilityGrid& grid, const Dynamics& dynamics,
                                 const SafetyFunction& safety)
    : corners_(std::size_t{1} << grid.dims()), actions_(grid.actions().size()), gamma_(grid.gamma()) {
  const std::size_t n = grid.size();
  h_.resize(n);
  index_.resize(n * actions_ * corners_);
  weight_.resize(n * actions_ * corners_);
  for (std::size_t c = 0; c < n; ++c) {
    const State s = grid.state_of(c);
    h_[c] = safety(s);
    for (std::size_t a = 0; a < actions_; ++a) {
      const Stencil st = grid.stencil(dynamics(s, grid.actions()[a]));
      const std::size_t off = (c * actions_ + a) * corners_;
      std::copy_n(st.index.begin(), corners_, index_.begin() + static_cast<std::ptrdiff_t>(off));
      std::copy_n(st.weight.begin(), corners_, weight_.begin() + static_cast<std::ptrdiff_t>(off));
    }
  }
}

double BellmanOperator::apply(std::span<const double> in, std::span<double> out, Execution exec) const {
  if (in.size() != h_.size() || out.size() != h_.size()) throw std::invalid_argument("BellmanOperator: size mismatch");
  const kernels::BackupProblem p{h_, index_, weight_, corners_, actions_, gamma_};
  return exec == Execution::parallel ? kernels::backup_sweep_omp(p, in, out) : kernels::backup_sweep_serial(p, in, out);
}

ConvergenceError::ConvergenceError(double residual, int iterations)
    : std::runtime_error("reachability solve did not converge: residual " + std::to_string(residual) + " after " +
                         std::to_string(iterations) + " iterations"),
      residual_(residual),
      iterations_(iterations) {}

SolveReport solve(ReachabilityGrid& grid, const Dynamics& dynamics, const SafetyFunction& safety,
                  const SolveOptions& options) {
  const BellmanOperator op(grid, dynamics, safety);
  std::vector<double> current(op.h().begin(), op.h().end());
  std::vector<double> next(current.size());
  SolveReport report;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const double r = op.apply(current, next, options.execution);
    current.swap(next);
    report.iterations = it;
    report.residual = r;
    report.residuals.push_back(r);
    if (r < options.tol) {
      std::copy(current.begin(), current.end(), grid.values().begin());
      return report;
    }
  }
  std::copy(current.begin(), current.end(), grid.values().begin());
  throw ConvergenceError(report.residual, report.iterations);
}

ValueQuery query_v(const ReachabilityGrid& grid, const State& s) {
  ValueQuery q;
  q.value = grid.interpolate(s, &q.clamped);
  return q;
}

double query_q(const ReachabilityGrid& grid, const State& s, const Action& u, const Dynamics& dynamics,
               const SafetyFunction& safety) {
  return bellman_backup(safety(s), grid.interpolate(dynamics(s, u)), grid.gamma());
}

double normalize_risk(double v, const RiskParams& p) {
  if (!p.valid()) throw std::invalid_argument("normalize_risk: v_max must exceed v_min");
  return std::clamp((v - p.v_min) / (p.v_max - p.v_min), 0.0, 1.0);
}

namespace {

double quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const std::size_t j = std::min(i + 1, sorted.size() - 1);
  const double f = pos - static_cast<double>(i);
  return sorted[i] * (1.0 - f) + sorted[j] * f;
}

}  // namespace

RiskParams percentile_anchors(const ReachabilityGrid& grid, double lo, double hi) {
  std::vector<double> v(grid.values().begin(), grid.values().end());
  RiskParams p{quantile(v, lo), quantile(v, hi)};
  if (!p.valid()) p.v_max = p.v_min + 1.0;
  return p;
}

void save_grid(const ReachabilityGrid& grid, std::ostream& out) {
  out << "SACA-GRID 1\n";
  out << std::setprecision(17);
  out << "dims " << grid.dims() << '\n';
  for (const Axis& a : grid.axes()) out << "axis " << a.min << ' ' << a.max << ' ' << a.cells << '\n';
  out << "gamma " << grid.gamma() << '\n';
  out << "actions " << grid.actions().size() << '\n';
  for (const Action& a : grid.actions()) out << a.steer << ' ' << a.accel << '\n';
  out << "values " << grid.size() << '\n';
  for (double v : grid.values()) out << v << '\n';
}

ReachabilityGrid load_grid(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string tok;
    if (!(in >> tok) || tok != word) throw std::runtime_error("grid file: expected '" + word + "'");
  };
  expect("SACA-GRID");
  int version = 0;
  if (!(in >> version) || version != 1) throw std::runtime_error("grid file: unsupported version");
  expect("dims");
  std::size_t dims = 0;
  in >> dims;
  std::vector<Axis> axes(dims);
  for (Axis& a : axes) {
    expect("axis");
    in >> a.min >> a.max >> a.cells;
  }
  expect("gamma");
  double gamma = 0.0;
  in >> gamma;
  expect("actions");
  std::size_t na = 0;
  in >> na;
  std::vector<Action> actions(na);
  for (Action& a : actions) in >> a.steer >> a.accel;
  if (!in) throw std::runtime_error("grid file: truncated header");
  ReachabilityGrid grid(std::move(axes), std::move(actions), gamma);
  expect("values");
  std::size_t n = 0;
  in >> n;
  if (n != grid.size()) throw std::runtime_error("grid file: value count does not match axes");
  for (double& v : grid.values()) in >> v;
  if (!in) throw std::runtime_error("grid file: truncated values");
  return grid;
}

}  // namespace saca::reach
