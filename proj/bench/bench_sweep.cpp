// Serial reference sweep against the OpenMP sweep on the same small grid.

#include "cvdp/classify.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

namespace {

cvdp::SweepOptions bench_grid() {
    cvdp::SweepOptions o;
    o.n_a = 6;
    o.n_b = 8;
    o.solver.t_end = 3000;
    o.classify.min_duration = 3000;
    return o;
}

void BM_SweepSerial(benchmark::State& st) {
    const cvdp::SweepOptions o = bench_grid();
    for (auto _ : st) benchmark::DoNotOptimize(cvdp::sweep_serial(o));
    st.counters["cells"] = o.n_a * o.n_b;
}

void BM_SweepOpenMP(benchmark::State& st) {
    const cvdp::SweepOptions o = bench_grid();
    omp_set_num_threads(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(cvdp::sweep(o));
    st.counters["cells"] = o.n_a * o.n_b;
    st.counters["threads"] = static_cast<double>(st.range(0));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->Iterations(2);
BENCHMARK(BM_SweepOpenMP)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->Iterations(2)->UseRealTime();

BENCHMARK_MAIN();
