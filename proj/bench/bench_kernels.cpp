#include <benchmark/benchmark.h>

#include "sinkflow/diffusion.hpp"
#include "sinkflow/kernels.hpp"
#include "sinkflow/sinkhorn.hpp"

using namespace sinkflow;

namespace {

void log_transform(benchmark::State& st, kernels::Backend be) {
    const auto n = static_cast<std::size_t>(st.range(0));
    const Grid g(-8.0, 8.0, n);
    const auto x = g.nodes();
    std::vector<double> c(n), out(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = -0.5 * x[i] * x[i];
    for (auto _ : st) {
        kernels::log_transform(be, x, c, x, 0.1, out);
        benchmark::DoNotOptimize(out.data());
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * n * n));
}

void sde_step(benchmark::State& st, kernels::Backend be) {
    const Grid g(-8.0, 8.0, 512);
    auto problem = make_pma_problem(GaussianMeasure(0.0, 1.0).spec(), GaussianMeasure(0.5, 1.0).spec(), g);
    const auto s = init_pma(problem, brenier_potential(problem->nu, problem->nu));
    const auto P = static_cast<std::size_t>(st.range(0));
    const auto e = make_ensemble(sample(problem->nu, P, 3), 3);
    for (auto _ : st) {
        auto next = sinkhorn_sde_step(e, s, 1e-3, {be, true});
        benchmark::DoNotOptimize(next.positions.data());
    }
    st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * P));
}

}  // namespace

BENCHMARK_CAPTURE(log_transform, serial, kernels::Backend::Serial)->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK_CAPTURE(log_transform, openmp, kernels::Backend::OpenMP)->Arg(256)->Arg(512)->Arg(1024);
BENCHMARK_CAPTURE(sde_step, serial, kernels::Backend::Serial)->Arg(10000)->Arg(100000);
BENCHMARK_CAPTURE(sde_step, openmp, kernels::Backend::OpenMP)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
