// Parallel kernels against their serial references.

#include "himpact/hawkes_sim.hpp"
#include "himpact/kernels.hpp"
#include "himpact/parallel.hpp"

#include <benchmark/benchmark.h>

using namespace himpact;

namespace {

SampledFunction power_grid(double horizon) { return sample_kernel(PowerLawKernel::with_norm(0.8456, -1.5), 1e-2, horizon); }

void BM_convolve_parallel(benchmark::State& st) {
    const auto f = power_grid(static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(convolve(f, f));
    st.counters["threads"] = thread_count();
}

void BM_convolve_serial(benchmark::State& st) {
    const auto f = power_grid(static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(reference::convolve(f, f));
}

void BM_resolvent_parallel(benchmark::State& st) {
    const auto f = power_grid(static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(kappa_resolvent(f));
    st.counters["threads"] = thread_count();
}

void BM_resolvent_serial(benchmark::State& st) {
    const auto f = power_grid(static_cast<double>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(reference::kappa_resolvent(f));
}

HimSpec mc_spec() {
    HimSpec him;
    him.phi = ExponentialKernel{0.5, 1.0};
    him.C = 0.5;
    him.schedule = TradingSchedule::constant(0.0, 10.0, 1.0);
    return him;
}

const std::vector<double> kGrid{2.0, 5.0, 10.0, 20.0, 40.0};

void BM_monte_carlo_parallel(benchmark::State& st) {
    const auto him = mc_spec();
    for (auto _ : st) benchmark::DoNotOptimize(monte_carlo_impact(him, static_cast<std::size_t>(st.range(0)), kGrid, 1));
    st.counters["threads"] = thread_count();
}

void BM_monte_carlo_serial(benchmark::State& st) {
    const auto him = mc_spec();
    for (auto _ : st) {
        benchmark::DoNotOptimize(reference::monte_carlo_impact(him, static_cast<std::size_t>(st.range(0)), kGrid, 1));
    }
}

} // namespace

BENCHMARK(BM_convolve_parallel)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_convolve_serial)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_resolvent_parallel)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_resolvent_serial)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_parallel)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_serial)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
