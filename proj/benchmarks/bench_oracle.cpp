#include <benchmark/benchmark.h>

#include "bench_support.hpp"
#include "ctmdp/oracle.hpp"

namespace {

void BM_ExactSisGreedy(benchmark::State& state) {
    const auto m = bench::load("sis");
    const auto sch = bench::random_scheduler(m, 60, {10, 10, 16});
    const auto p = ctmdp::ReachabilityProperty::make(ctmdp::TemporalMode::globally, 50, 60, "X_S == 100", m);
    const double h = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(ctmdp::exact_value(m, ctmdp::greedy_policy(sch, &m), p, h));
}

void BM_BruteForceWalkRun(benchmark::State& state) {
    const auto m = bench::load("walk_run");
    const auto p = ctmdp::ReachabilityProperty::make(ctmdp::TemporalMode::eventually, 0, 1, "x == 2", m);
    for (auto _ : state)
        benchmark::DoNotOptimize(ctmdp::brute_force_constant(m, p, 0.01, ctmdp::AssignmentScope::per_state));
}

}  // namespace

BENCHMARK(BM_ExactSisGreedy)->ArgNames({"steps_per_unit"})->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForceWalkRun)->Unit(benchmark::kMillisecond);
