#include <benchmark/benchmark.h>

#include <vector>

#include "gyreplan/advect.hpp"
#include "gyreplan/flowfield.hpp"
#include "gyreplan/ftle.hpp"
#include "gyreplan/mpc.hpp"

using namespace gyreplan;

namespace {

void BM_FlowMap(benchmark::State& state) {
    const DoubleGyre g;
    const GridSpec spec{0.0, 2.0, 0.0, 1.0, static_cast<int>(state.range(0)), static_cast<int>(state.range(0) / 2 + 1)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(flow_map(g, spec, 0.0, 5.0, IntegratorConfig{}));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.size()));
}
BENCHMARK(BM_FlowMap)->Arg(41)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_FtleFromFlowMap(benchmark::State& state) {
    const DoubleGyre g;
    const GridSpec spec{0.0, 2.0, 0.0, 1.0, 201, 101};
    const FlowMapGrid map = flow_map(g, spec, 0.0, 1.0, IntegratorConfig{});
    const auto method = state.range(0) == 0 ? FtleMethod::cauchy_green : FtleMethod::svd;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ftle_from_flow_map(map, method));
    }
}
BENCHMARK(BM_FtleFromFlowMap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

ControlSequence wobble(const MpcConfig& cfg) {
    ControlSequence seq;
    for (int k = 0; k < cfg.steps(); ++k) {
        seq.u.emplace_back(0.05 * ((k % 3) - 1), -0.03);
    }
    return seq;
}

void BM_CostGradient(benchmark::State& state) {
    const DoubleGyre g;
    MpcConfig cfg;
    cfg.horizon = static_cast<double>(state.range(0));
    const ControlSequence seq = wobble(cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cost_gradient(g, Vec2(1.5, 0.7), seq, cfg, IntegratorConfig{}));
    }
}
BENCHMARK(BM_CostGradient)->Arg(4)->Arg(12)->Unit(benchmark::kMicrosecond);

void BM_SolveHorizon(benchmark::State& state) {
    const DoubleGyre g;
    MpcConfig cfg;
    cfg.horizon = static_cast<double>(state.range(0));
    cfg.R = 2.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_horizon(g, Vec2(2.0, 1.0), 0.0, cfg, IntegratorConfig{}));
    }
}
BENCHMARK(BM_SolveHorizon)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

} // namespace
BENCHMARK_MAIN();
