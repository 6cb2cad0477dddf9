#include <benchmark/benchmark.h>

#include "cascade/engine.hpp"
#include "cascade/sweep.hpp"

using namespace cascade;

namespace {

const PreparedCascade& fixture() {
    static const PreparedCascade pc = [] {
        const auto fx = synth_fixture(42, 10000, 10, {{0.9, 6, 1}, {0.96, 6, 100}, {0.99, 6, 10000}});
        return prepare(fx.config, fx.labels, fx.scores);
    }();
    return pc;
}

void BM_SweepSerial(benchmark::State& state) {
    const auto& pc = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(pc, ThresholdGrid{}));
}

void BM_SweepOpenMP(benchmark::State& state) {
    const auto& pc = fixture();
    SweepOptions opt;
    opt.jobs = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sweep(pc, ThresholdGrid{}, opt));
}

void BM_SweepAccelerated(benchmark::State& state) {
    const auto& pc = fixture();
    SweepOptions opt;
    opt.jobs = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(sweep_accelerated(pc, ThresholdGrid{}, opt));
}

void BM_ParetoFront(benchmark::State& state) {
    const auto points = sweep_accelerated(fixture(), ThresholdGrid{}).points;
    for (auto _ : state) benchmark::DoNotOptimize(pareto_front(points));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepAccelerated)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParetoFront)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
