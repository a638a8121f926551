#include <benchmark/benchmark.h>

#include <vector>

#include "saca/reachability.hpp"
#include "saca/risk_model.hpp"

namespace {

using namespace saca;

struct Fixture {
  reach::ReachabilityGrid grid;
  reach::BellmanOperator op;
  std::vector<double> in;
  std::vector<double> out;

  static Fixture make() {
    const ObstacleShape shape = ObstacleShape::ellipse(3.5, 1.75);
    const RelativeGridSpec spec = default_relative_spec(shape);
    reach::ReachabilityGrid grid(spec.axes, spec.actions, spec.gamma);
    reach::BellmanOperator op(grid, relative_dynamics(spec), relative_safety(shape));
    std::vector<double> in(op.h().begin(), op.h().end());
    return {std::move(grid), std::move(op), in, std::vector<double>(in.size())};
  }
};

Fixture& fixture() {
  static Fixture f = Fixture::make();
  return f;
}

void sweep(benchmark::State& state, reach::Execution exec) {
  Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.op.apply(f.in, f.out, exec));
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.op.size()));
}

void BM_SweepSerial(benchmark::State& s) { sweep(s, reach::Execution::serial); }
void BM_SweepParallel(benchmark::State& s) { sweep(s, reach::Execution::parallel); }

}  // namespace

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
