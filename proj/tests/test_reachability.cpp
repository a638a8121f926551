#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "saca/reachability.hpp"
#include "saca/reachability_kernels.hpp"

using namespace saca::reach;

namespace {

State at(double x, double y = 0.0) {
  State s{};
  s[0] = x;
  s[1] = y;
  return s;
}

/// 1-D chain on nodes 0..n-1 where every action moves one node right and the
/// last node is absorbing.
struct Chain {
  ReachabilityGrid grid;
  Dynamics dyn;
  SafetyFunction safety;

  explicit Chain(std::vector<double> h, double gamma)
      : grid({{0.0, static_cast<double>(h.size() - 1), h.size()}}, {{0.0, 0.0}}, gamma),
        dyn([n = h.size()](const State& s, const Action&) {
          State t = s;
          t[0] = std::min(s[0] + 1.0, static_cast<double>(n - 1));
          return t;
        }),
        safety([h](const State& s) { return h[static_cast<std::size_t>(std::lround(s[0]))]; }) {}
};

}  // namespace

TEST(Reachability, BellmanBackupFormula) {
  EXPECT_DOUBLE_EQ(bellman_backup(1.0, 3.0, 0.5), 0.5 * 1.0 + 0.5 * 3.0);
  EXPECT_DOUBLE_EQ(bellman_backup(2.0, -3.0, 0.25), 2.0);
  EXPECT_THROW(bellman_backup(0.0, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(bellman_backup(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST(Reachability, StencilWeightsAndLinearExactness) {
  ReachabilityGrid g({{-1.0, 1.0, 5}, {0.0, 4.0, 9}, {2.0, 3.0, 3}}, default_actions(), 0.9);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const State s = g.state_of(c);
    g.values()[c] = 2.0 * s[0] - 0.5 * s[1] + 3.0 * s[2] + 1.0;
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const State s{-1.0 + 2.0 * u(rng), 4.0 * u(rng), 2.0 + u(rng), 0.0, 0.0};
    const Stencil st = g.stencil(s);
    double sum = 0.0;
    for (std::size_t i = 0; i < st.count; ++i) {
      EXPECT_GE(st.weight[i], 0.0);
      sum += st.weight[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    bool clamped = true;
    EXPECT_NEAR(g.interpolate(s, &clamped), 2.0 * s[0] - 0.5 * s[1] + 3.0 * s[2] + 1.0, 1e-9);
    EXPECT_FALSE(clamped);
  }
  bool clamped = false;
  g.interpolate(at(5.0, 1.0), &clamped);
  EXPECT_TRUE(clamped);
}

TEST(Reachability, ChainMatchesClosedForm) {
  const double gamma = 0.6;
  const std::vector<double> h{-1.0, 0.5, -0.2, 2.0};
  Chain c(h, gamma);
  SolveOptions opts;
  opts.tol = 1e-13;
  opts.execution = Execution::serial;
  solve(c.grid, c.dyn, c.safety, opts);
  // Absorbing end: v = (1-g) h + g max(h, v) has the fixed point v = h.
  std::vector<double> expect(h.size());
  expect.back() = h.back();
  for (std::size_t i = h.size() - 1; i-- > 0;) expect[i] = (1 - gamma) * h[i] + gamma * std::max(h[i], expect[i + 1]);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(c.grid.values()[i], expect[i], 1e-10) << i;
}

TEST(Reachability, ConvergenceErrorAtCap) {
  Chain c({-1.0, 0.0, 1.0, 3.0, -2.0, 5.0}, 0.99);
  SolveOptions opts;
  opts.tol = 1e-14;
  opts.max_iterations = 2;
  EXPECT_THROW(solve(c.grid, c.dyn, c.safety, opts), ConvergenceError);
}

TEST(Reachability, ResidualsShrinkGeometrically) {
  std::vector<double> h;
  for (int i = 0; i < 30; ++i) h.push_back(0.1 * i * i);
  Chain c(h, 0.8);
  SolveOptions opts;
  opts.tol = 1e-9;
  opts.execution = Execution::serial;
  const SolveReport r = solve(c.grid, c.dyn, c.safety, opts);
  ASSERT_GE(r.residuals.size(), 3u);
  EXPECT_EQ(r.iterations, static_cast<int>(r.residuals.size()));
  for (std::size_t i = 1; i < r.residuals.size(); ++i)
    EXPECT_LE(r.residuals[i], 0.8 * r.residuals[i - 1] * (1.0 + 1e-9) + 1e-15);
}

TEST(Reachability, SerialAndParallelKernelsAgreeBitwise) {
  ReachabilityGrid g({{-5.0, 5.0, 17}, {-3.0, 3.0, 11}, {0.0, 8.0, 5}}, default_actions(), 0.95);
  const Dynamics dyn = [](const State& s, const Action& a) {
    State t = s;
    t[0] = s[0] - 0.1 * s[2];
    t[1] = s[1] + 0.1 * s[2] * std::sin(a.steer);
    t[2] = std::max(0.0, s[2] + 0.1 * a.accel);
    return t;
  };
  const SafetyFunction h = [](const State& s) { return 1.0 - std::hypot(s[0] / 2.0, s[1]); };
  BellmanOperator op(g, dyn, h);
  std::vector<double> in(op.h().begin(), op.h().end()), a(op.size()), b(op.size());
  const double ra = op.apply(in, a, Execution::serial);
  const double rb = op.apply(in, b, Execution::parallel);
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(a, b);
}

TEST(Reachability, OperatorIsMonotone) {
  Chain c({0.3, -1.0, 0.7, 0.1, -0.4}, 0.9);
  BellmanOperator op(c.grid, c.dyn, c.safety);
  std::vector<double> lo{-1, -1, -1, -1, -1}, hi{2, 0, 1, 3, 0}, blo(5), bhi(5);
  op.apply(lo, blo, Execution::serial);
  op.apply(hi, bhi, Execution::serial);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_LE(blo[i], bhi[i]);
}

TEST(Reachability, QueryQIsOneBackup) {
  Chain c({-1.0, 0.5, 2.0}, 0.7);
  solve(c.grid, c.dyn, c.safety, {1e-12, 2000, Execution::serial});
  const double q = query_q(c.grid, at(0.0), {0.0, 0.0}, c.dyn, c.safety);
  EXPECT_NEAR(q, bellman_backup(-1.0, c.grid.values()[1], 0.7), 1e-12);
  EXPECT_NEAR(query_v(c.grid, at(0.0)).value, q, 1e-9);
}

TEST(Reachability, RiskNormalization) {
  const RiskParams p{-2.0, 2.0};
  EXPECT_DOUBLE_EQ(normalize_risk(0.0, p), 0.5);
  EXPECT_DOUBLE_EQ(normalize_risk(-5.0, p), 0.0);
  EXPECT_DOUBLE_EQ(normalize_risk(5.0, p), 1.0);

  ReachabilityGrid g({{0.0, 99.0, 100}}, {{0.0, 0.0}}, 0.5);
  for (std::size_t i = 0; i < 100; ++i) g.values()[i] = static_cast<double>(i);
  const RiskParams a = percentile_anchors(g);
  EXPECT_NEAR(a.v_min, 5.0, 1.0);
  EXPECT_NEAR(a.v_max, 94.0, 1.0);
}

TEST(Reachability, SaveLoadRoundTrip) {
  ReachabilityGrid g({{-1.0, 1.0, 3}, {0.0, 2.0, 4}}, default_actions(), 0.93);
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = std::sin(1.7 * static_cast<double>(i));
  std::stringstream ss;
  save_grid(g, ss);
  const ReachabilityGrid r = load_grid(ss);
  ASSERT_EQ(r.size(), g.size());
  EXPECT_EQ(r.dims(), 2u);
  EXPECT_DOUBLE_EQ(r.gamma(), 0.93);
  EXPECT_EQ(r.actions().size(), g.actions().size());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(r.values()[i], g.values()[i]);

  std::stringstream bad("NOT-A-GRID");
  EXPECT_ANY_THROW(load_grid(bad));
}

TEST(Reachability, ConstructorValidates) {
  EXPECT_ANY_THROW(ReachabilityGrid({}, default_actions(), 0.9));
  EXPECT_ANY_THROW(ReachabilityGrid({{0.0, 1.0, 2}}, {}, 0.9));
  EXPECT_ANY_THROW(ReachabilityGrid({{0.0, 1.0, 2}}, default_actions(), 1.0));
}
