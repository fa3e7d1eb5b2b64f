#include <benchmark/benchmark.h>

#include <vector>

#include "bench_support.hpp"

namespace {

void BM_TabulatedProbabilities(benchmark::State& state) {
    const auto m = bench::load("sis");
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto sch = bench::random_scheduler(m, 60, {c, c, 16});
    ctmdp::PolicyEvaluator evaluator(sch, &m);
    ctmdp::RandomStream rng(3);
    std::vector<double> p(2);
    ctmdp::State s(2);
    for (auto _ : state) {
        s[0] = static_cast<ctmdp::Count>(rng.uniform_open() * 50);
        s[1] = static_cast<ctmdp::Count>(rng.uniform_open() * 50);
        evaluator.probabilities(std::span<const ctmdp::Count>(s), 60 * rng.uniform_open(), p);
        benchmark::DoNotOptimize(p.data());
    }
}

void BM_DirectLogit(benchmark::State& state) {
    const auto m = bench::load("sis");
    const auto c = static_cast<std::size_t>(state.range(0));
    const auto sch = bench::random_scheduler(m, 60, {c, c, 16});
    ctmdp::RandomStream rng(3);
    std::vector<double> x(2);
    for (auto _ : state) {
        x[0] = 100 * rng.uniform_open();
        x[1] = 100 * rng.uniform_open() * (1 - x[0] / 100);
        benchmark::DoNotOptimize(ctmdp::eval_logit(sch, 1, x, 60 * rng.uniform_open()));
    }
}

}  // namespace

BENCHMARK(BM_TabulatedProbabilities)->ArgNames({"per_axis"})->Arg(4)->Arg(10)->Arg(20);
BENCHMARK(BM_DirectLogit)->ArgNames({"per_axis"})->Arg(4)->Arg(10)->Arg(20);
