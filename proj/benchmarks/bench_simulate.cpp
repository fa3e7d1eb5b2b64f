#include <benchmark/benchmark.h>

#include "bench_support.hpp"
#include "ctmdp/simulate.hpp"
#include "ctmdp/smc.hpp"

namespace {

void BM_SimulateSis(benchmark::State& state) {
    const auto m = bench::load("sis");
    const auto sch = bench::random_scheduler(m, 60, {10, 10, 16});
    std::uint64_t i = 0;
    std::size_t steps = 0;
    for (auto _ : state) {
        ctmdp::RandomStream rng(ctmdp::StreamKey{1, ctmdp::StreamDomain::simulation, 0, i++});
        const auto tr = ctmdp::simulate(m, sch, 60, rng);
        steps += tr.steps.size();
    }
    state.counters["steps"] = benchmark::Counter(double(steps), benchmark::Counter::kIsRate);
}

void BM_SimulateAndCheckSis(benchmark::State& state) {
    const auto m = bench::load("sis");
    const auto sch = bench::random_scheduler(m, 60, {10, 10, 16});
    const auto p = ctmdp::ReachabilityProperty::make(ctmdp::TemporalMode::globally, 50, 60, "X_S == 100", m);
    std::uint64_t i = 0;
    for (auto _ : state) {
        ctmdp::RandomStream rng(ctmdp::StreamKey{1, ctmdp::StreamDomain::simulation, 0, i++});
        benchmark::DoNotOptimize(ctmdp::simulate_and_check(m, sch, p, rng));
    }
}

void BM_EstimateQ(benchmark::State& state) {
    const auto m = bench::load("sis");
    const auto sch = bench::random_scheduler(m, 60, {10, 10, 16});
    const auto p = ctmdp::ReachabilityProperty::make(ctmdp::TemporalMode::globally, 50, 60, "X_S == 100", m);
    const auto runs = static_cast<std::uint64_t>(state.range(0));
    std::uint64_t epoch = 0;
    for (auto _ : state) {
        const auto r = ctmdp::estimate_q(m, sch, p, {runs, 0.95, 1},
                                         ctmdp::StreamKey{1, ctmdp::StreamDomain::simulation, epoch++});
        benchmark::DoNotOptimize(r.estimate);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * runs));
}

}  // namespace

BENCHMARK(BM_SimulateSis);
BENCHMARK(BM_SimulateAndCheckSis);
BENCHMARK(BM_EstimateQ)->ArgNames({"runs"})->Arg(1000)->Unit(benchmark::kMillisecond);
