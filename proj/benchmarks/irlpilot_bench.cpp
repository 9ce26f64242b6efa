#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "irlpilot/basis.hpp"
#include "irlpilot/experiment.hpp"
#include "irlpilot/history_stack.hpp"
#include "irlpilot/lti_system.hpp"
#include "irlpilot/pilot.hpp"
#include "irlpilot/quadcopter.hpp"
#include "irlpilot/rhso.hpp"

namespace irlpilot {
namespace {

struct Problem {
  LinearSystem system = BuildLinearModel(QuadParams::Lab());
  CostFunctional cost = MakeDefaultCost();
  PilotPolicy policy = SynthesizePilot(system, cost);

  WeightLayout Layout(bool full) const {
    return full ? WeightLayout::Full(12, 4) : WeightLayout::FromMasks(cost.q_mask(), cost.r_mask());
  }
};

const Problem& SharedProblem() {
  static const Problem problem;
  return problem;
}

std::vector<Eigen::VectorXd> RandomStates(int count) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(12);
    for (auto& v : x) v = n(rng);
    xs.push_back(x);
  }
  return xs;
}

HistoryStack FilledStack(const Problem& p, const WeightLayout& layout, int capacity) {
  HistoryStack stack(p.system, layout, capacity, 0.002);
  const auto xs = RandomStates(capacity);
  for (int i = 0; i < capacity; ++i) stack.Record(0.08 * i, xs[i], -p.policy.k_expert * xs[i]);
  return stack;
}

void BM_SolveCareHamiltonian(benchmark::State& state) {
  const Problem& p = SharedProblem();
  for (auto _ : state) benchmark::DoNotOptimize(SolveCare(p.system, p.cost));
}
BENCHMARK(BM_SolveCareHamiltonian)->Unit(benchmark::kMicrosecond);

void BM_SolveCareNewtonKleinman(benchmark::State& state) {
  const Problem& p = SharedProblem();
  for (auto _ : state) benchmark::DoNotOptimize(SolveCareNewtonKleinman(p.system, p.cost));
}
BENCHMARK(BM_SolveCareNewtonKleinman)->Unit(benchmark::kMillisecond);

void BM_MakeSlot(benchmark::State& state) {
  const Problem& p = SharedProblem();
  const WeightLayout layout = p.Layout(state.range(0) != 0);
  const Eigen::VectorXd x = RandomStates(1).front();
  const Eigen::VectorXd u = -p.policy.k_expert * x;
  for (auto _ : state) benchmark::DoNotOptimize(MakeSlot(p.system, layout, 0.0, x, u));
}
BENCHMARK(BM_MakeSlot)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

// Each iteration offers one sample to a full stack, which runs the
// replacement search.
void BM_StackRecordWhenFull(benchmark::State& state) {
  const Problem& p = SharedProblem();
  const WeightLayout layout = p.Layout(state.range(0) != 0);
  HistoryStack stack = FilledStack(p, layout, 100);
  const auto xs = RandomStates(4096);
  double t = 100.0;
  std::size_t i = 0;
  for (auto _ : state) {
    const Eigen::VectorXd& x = xs[i++ % xs.size()];
    benchmark::DoNotOptimize(stack.Record(t, x, -p.policy.k_expert * x));
    t += 0.08;
  }
}
BENCHMARK(BM_StackRecordWhenFull)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ObserverStep(benchmark::State& state) {
  const Problem& p = SharedProblem();
  const WeightLayout layout = p.Layout(state.range(0) != 0);
  const HistoryStack stack = FilledStack(p, layout, 100);
  const NormalEquations normal(stack, 0.002);
  ObserverState observer =
      MakeObserver(layout, Eigen::VectorXd::Constant(layout.total_dim(), 0.5), 0.002);
  for (auto _ : state) {
    observer = Step(observer, normal, stack, 0.004);
    benchmark::DoNotOptimize(observer);
  }
}
BENCHMARK(BM_ObserverStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_ShortTrial(benchmark::State& state) {
  ExperimentConfig cfg = ExperimentConfig::Defaults();
  cfg.sim.horizon = 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(RunTrial(cfg, 0));
}
BENCHMARK(BM_ShortTrial)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace irlpilot

BENCHMARK_MAIN();
