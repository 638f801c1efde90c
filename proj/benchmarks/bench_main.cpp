#include <benchmark/benchmark.h>

#include "srs/hierarchy.hpp"
#include "srs/simulator.hpp"

namespace {

srs::KernelSet model(int dim, double a_amp) {
    using namespace srs;
    return {CompetitionKernel(RadialProfile(Shape::tophat, 1.0, a_amp, dim)), MortalityField::constant(0.2),
            FissionKernel::delta(DispersalKernel(RadialProfile(Shape::tophat, 1.0, dim == 1 ? 0.5 : 1.0 / 3.14159265358979, dim)))};
}

// Gillespie steps near the competition equilibrium (about 8 points per unit length).
void BM_StepThroughput(benchmark::State& st) {
    const int dim = static_cast<int>(st.range(0));
    const double side = dim == 1 ? 1000.0 : 40.0;
    auto k = model(dim, 0.05);
    auto s = srs::init_poisson(dim == 1 ? 8.0 : 5.0, k, srs::TorusGeometry(dim, side), 7);
    for (auto _ : st) {
        auto ev = s.step();
        if (!ev) break;
        benchmark::DoNotOptimize(ev);
    }
    st.SetItemsProcessed(st.iterations());
}
BENCHMARK(BM_StepThroughput)->Arg(1)->Arg(2);

void BM_NeighbourQuery(benchmark::State& st) {
    const int dim = static_cast<int>(st.range(0));
    srs::TorusGeometry g(dim, 100.0);
    srs::Configuration c(g, 1.0);
    srs::Rng rng(3);
    for (int i = 0; i < 10000; ++i) c.insert({rng.uniform() * 100.0, dim == 2 ? rng.uniform() * 100.0 : 0.0});
    std::size_t i = 0;
    for (auto _ : st) {
        double acc = 0.0;
        c.for_each_within(c[i], 1.0, [&](std::size_t, const srs::Vec&, double dd) { acc += dd; });
        benchmark::DoNotOptimize(acc);
        i = (i + 1) % c.size();
    }
}
BENCHMARK(BM_NeighbourQuery)->Arg(1)->Arg(2);

void BM_PairRhs(benchmark::State& st) {
    const double h = 1.0 / static_cast<double>(st.range(0));
    srs::PairModel m(model(1, 0.05), {h, 4.0}, srs::Closure::kirkwood);
    auto s = m.poisson_state(5.0);
    for (std::size_t j = 0; j < s.g.size(); ++j) s.g[j] *= 1.0 + 0.1 / (1.0 + static_cast<double>(j));
    for (auto _ : st) benchmark::DoNotOptimize(m.rhs(s));
    st.counters["nodes"] = static_cast<double>(m.nodes());
}
BENCHMARK(BM_PairRhs)->Arg(20)->Arg(40);

}  // namespace

BENCHMARK_MAIN();
