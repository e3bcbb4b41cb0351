#include <benchmark/benchmark.h>

#include <random>
#include <span>

#include "hems/control/mpc.hpp"
#include "hems/control/rbc.hpp"
#include "hems/harness/synthetic.hpp"
#include "hems/safety/safety_layer.hpp"
#include "hems/tariff/tariff.hpp"
#include "hems/treec/treec.hpp"

using namespace hems;

namespace {

const Timestamp kStart = make_time(2024, 5, 6, 15);

ExogenousData house_data(int id, int days) {
  SyntheticOptions o;
  o.start = kStart;
  o.days = days;
  o.seed = 42;
  return synthetic_house_data(HouseConfig::reference(id), EvParams{}, o);
}

MpcInputs horizon_inputs(const ExogenousData& d, int steps) {
  MpcInputs in;
  in.now = kStart;
  in.bess_soc = 0.5;
  for (int k = 0; k < steps; ++k) {
    const Timestamp t = kStart + kEmsStep * k;
    in.load_kw.push_back(d.load_kw.at(t));
    in.pv_kw.push_back(d.pv_kw.at(t));
    in.day_ahead.push_back(d.price.at(t));
  }
  return in;
}

}  // namespace

static void BM_SafetyCorrection(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SafetyContext ctx;
  ctx.ev_soc = 0.4;
  ctx.ev_soc_goal = 0.9;
  for (auto _ : state) {
    ctx.load_kw = 12.0 * u(rng);
    ctx.pv_kw = 4.0 * u(rng);
    const ActionPair a{BessCommand::power(-3.2 + 6.4 * u(rng)), 7.4 * u(rng)};
    benchmark::DoNotOptimize(apply_safety(a, ctx));
  }
}
BENCHMARK(BM_SafetyCorrection);

static void BM_MpcSolve(benchmark::State& state) {
  const auto d = house_data(static_cast<int>(state.range(1)), 2);
  const auto in = horizon_inputs(d, static_cast<int>(state.range(0)));
  const auto house = HouseConfig::reference(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(mpc_solve(in, house, EvParams{}));
}
BENCHMARK(BM_MpcSolve)->Args({24, 1})->Args({96, 1})->Args({96, 2})->Unit(benchmark::kMillisecond);

static void BM_SimulateDayRbc(benchmark::State& state) {
  const auto d = house_data(1, 1);
  const auto house = HouseConfig::reference(1);
  for (auto _ : state) {
    RbcController rbc;
    benchmark::DoNotOptimize(run_scenario(house, rbc, d, {kStart, kStart + std::chrono::days(1)}));
  }
}
BENCHMARK(BM_SimulateDayRbc)->Unit(benchmark::kMicrosecond);

static void BM_TreecFitness(benchmark::State& state) {
  const auto house = HouseConfig::reference(1);
  const treec::TrainingScenario s{house, house_data(1, 7), {kStart, kStart + std::chrono::days(7)}, {}, {}};
  const treec::GenomeLayout layout;
  const auto ranges = treec::feature_ranges(s.data, s.window);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> genome(static_cast<std::size_t>(layout.size()));
  for (auto _ : state) {
    for (auto& g : genome) g = u(rng);
    benchmark::DoNotOptimize(treec::fitness(genome, s, layout, ranges));
  }
}
BENCHMARK(BM_TreecFitness)->Unit(benchmark::kMillisecond);

static void BM_PsoSphere(benchmark::State& state) {
  treec::PsoConfig c;
  c.population = 50;
  c.generations = static_cast<int>(state.range(0));
  const auto sphere = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += (v - 0.3) * (v - 0.3);
    return s;
  };
  for (auto _ : state) benchmark::DoNotOptimize(treec::pso_optimize(sphere, 92, c));
}
BENCHMARK(BM_PsoSphere)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_TotalCostMonth(benchmark::State& state) {
  const auto d = house_data(1, 30);
  std::vector<MeteredStep> steps;
  for (int k = 0; k < 96 * 30; ++k) steps.push_back({kStart + kEmsStep * k, 0.3, 0.1});
  for (auto _ : state) benchmark::DoNotOptimize(total_cost(steps, d.price));
}
BENCHMARK(BM_TotalCostMonth)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
