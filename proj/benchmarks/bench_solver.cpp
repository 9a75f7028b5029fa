#include <benchmark/benchmark.h>

#include "hjb/problem.hpp"
#include "hjb/upwind.hpp"

using namespace hjb;

static void BM_MinimizeScan(benchmark::State& state) {
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    const Vec x{0.3, 0.0};
    const Vec dp{0.7, 0.0};
    const Vec dm{-0.2, 0.0};
    for (auto _ : state) {
        const InnerMinimum m = minimize_input(p, x, dp, dm);
        benchmark::DoNotOptimize(m.value);
    }
}
BENCHMARK(BM_MinimizeScan);

static void BM_MinimizeClosedForm(benchmark::State& state) {
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    const Vec x{0.3, 0.0};
    const Vec dp{0.7, 0.0};
    const Vec dm{-0.2, 0.0};
    for (auto _ : state) {
        const InnerMinimum m = minimize_input_closed_form(p, x, dp, dm);
        benchmark::DoNotOptimize(m.value);
    }
}
BENCHMARK(BM_MinimizeClosedForm);

static void BM_StepBackward1D(benchmark::State& state) {
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    const int n_space = static_cast<int>(state.range(0));
    const GridSpec g = make_grid(1, 1.0, n_space, 1.0, 2 * n_space);
    const ScalarField v = ScalarField::sampled(
        g, g.n_time(), [](const Vec& x) { return 0.4 * x[0] * x[0]; });
    for (auto _ : state) {
        const StepResult r = step_backward(p, v);
        benchmark::DoNotOptimize(r.value_prev.values().data());
    }
    state.SetItemsProcessed(state.iterations() * g.num_nodes());
}
BENCHMARK(BM_StepBackward1D)->Arg(20)->Arg(80)->Arg(320);

static void BM_StepBackward2D(benchmark::State& state) {
    const ControlProblem p = ObstacleBenchmark2D{}.problem();
    const int n_space = static_cast<int>(state.range(0));
    const GridSpec g = make_grid(2, 1.0, n_space, 1.0, 10 * n_space);
    const ScalarField v = ScalarField::sampled(g, g.n_time(), [&p](const Vec& x) {
        return p.terminal_cost(x);
    });
    for (auto _ : state) {
        const StepResult r = step_backward(p, v);
        benchmark::DoNotOptimize(r.value_prev.values().data());
    }
    state.SetItemsProcessed(state.iterations() * g.num_nodes());
}
BENCHMARK(BM_StepBackward2D)->Arg(10)->Arg(25)->Arg(50);

static void BM_SolveBenchmark1D(benchmark::State& state) {
    const ControlProblem p = LqrBenchmark{1.0}.problem();
    const GridSpec g = make_grid(1, 1.0, 40, 1.0, 80);
    for (auto _ : state) {
        const SolveResult r = solve(p, g);
        benchmark::DoNotOptimize(r.minimizer_stats.nodes_minimized);
    }
}
BENCHMARK(BM_SolveBenchmark1D);

BENCHMARK_MAIN();
