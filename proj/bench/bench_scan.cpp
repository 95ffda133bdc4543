#include <benchmark/benchmark.h>

#include <memory>

#include "microspec/acs.hpp"
#include "microspec/field_states.hpp"
#include "microspec/kernels.hpp"
#include "microspec/microlocal.hpp"
#include "microspec/musc.hpp"

using namespace microspec;

namespace {

Execution mode_of(const benchmark::State& st) { return st.range(0) == 0 ? Execution::serial : Execution::parallel; }

std::vector<ScanTask> line_grid() {
    std::vector<ScanTask> t;
    for (double x : {-0.8, -0.4, 0.0, 0.4, 0.8})
        for (double d : {1.0, -1.0})
            t.push_back(ScanTask{{CovectorPoint{Vec2(x, 0.0), Vec2(d, 0.0)}}});
    return t;
}

const QuasifreeState& vacuum() {
    static const QuasifreeState s = make_state(StateDescriptor::parse("vacuum:m=1"));
    return s;
}

void BM_HeavisideScan(benchmark::State& st) {
    const SmearableKernel k = heaviside_kernel();
    const std::vector<ScanTask> tasks = line_grid();
    LadderConfig cfg;
    for (auto _ : st)
        benchmark::DoNotOptimize(estimate_wavefront(k, tasks, cfg, mode_of(st)));
}

void BM_VacuumTwoPointScan(benchmark::State& st) {
    const SmearableKernel k = vacuum().two_point_kernel();
    const std::vector<ScanTask> grid = radzikowski_grid();
    const std::vector<ScanTask> tasks(grid.begin(), grid.begin() + 8);
    LadderConfig cfg;
    for (auto _ : st)
        benchmark::DoNotOptimize(estimate_wavefront(k, tasks, cfg, mode_of(st)));
}

void BM_FunctionAlgebraAcs(benchmark::State& st) {
    const FunctionalModel m = FunctionalModel::function_algebra(delta_kernel());
    const std::vector<ScanTask> tasks = line_grid();
    AcsOptions opts;
    opts.battery = 2;
    for (auto _ : st)
        benchmark::DoNotOptimize(estimate_acs(m, 1, 1.0, tasks, opts, mode_of(st)));
}

void BM_MuscContainment(benchmark::State& st) {
    LadderConfig cfg;
    const SpectrumReport r = estimate_wavefront(vacuum().two_point_kernel(), radzikowski_grid(), cfg);
    const SpacetimeModel mk = SpacetimeModel::minkowski();
    for (auto _ : st)
        benchmark::DoNotOptimize(musc_containment(r, mk, ConeVariant::lightlike_geodesic, {}, mode_of(st)));
}

}  // namespace

BENCHMARK(BM_HeavisideScan)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VacuumTwoPointScan)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_FunctionAlgebraAcs)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_MuscContainment)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
