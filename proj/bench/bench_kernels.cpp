// Serial reference vs OpenMP kernels on planner-sized grids. Set OMP_NUM_THREADS to vary
// the thread count.

#include <random>

#include <benchmark/benchmark.h>

#include "carpal/kernels.hpp"
#include "carpal/predictor.hpp"

using namespace carpal;

namespace {

std::vector<std::uint8_t> occupancy(int nx, int ny) {
    Rng rng(1);
    std::bernoulli_distribution occ(0.05);
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(nx) * ny);
    for (auto& c : cells) c = occ(rng) ? 1 : 0;
    return cells;
}

std::vector<Vec2> support(std::size_t n) {
    Rng rng(2);
    std::normal_distribution<double> x(25.0, 8.0), y(0.0, 1.5);
    std::vector<Vec2> out(n);
    for (auto& p : out) p = {x(rng), y(rng)};
    return out;
}

template <auto Fn>
void edt(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto cells = occupancy(n, n);
    for (auto _ : st) benchmark::DoNotOptimize(Fn(cells, n, n));
    st.SetItemsProcessed(st.iterations() * n * n);
}

template <auto Fn>
void kde(benchmark::State& st) {
    const GridGeometry g{{-10.0, -15.0}, 0.1, 600, 300};
    const auto pts = support(static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(Fn(g, pts, 0.5));
    st.SetItemsProcessed(st.iterations() * g.nx * g.ny);
}

template <auto Fn>
void safety(benchmark::State& st) {
    std::vector<double> d(static_cast<std::size_t>(st.range(0)));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = 0.01 * static_cast<double>(i % 1000);
    for (auto _ : st) benchmark::DoNotOptimize(Fn(d, 1.0, 0.0));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void forward(benchmark::State& st) {
    const PredictorModel m = PredictorModel::create(PredictorConfig{}, 0);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(m.input_dim(), st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(m.forward(x));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(edt<kernels::serial::squared_edt>)->Name("edt/serial")->Arg(128)->Arg(512);
BENCHMARK(edt<kernels::parallel::squared_edt>)->Name("edt/parallel")->Arg(128)->Arg(512);
BENCHMARK(kde<kernels::serial::kde_density>)->Name("kde/serial")->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(kde<kernels::parallel::kde_density>)->Name("kde/parallel")->Arg(300)->Unit(benchmark::kMillisecond);
BENCHMARK(safety<kernels::serial::safety>)->Name("safety/serial")->Arg(1 << 18);
BENCHMARK(safety<kernels::parallel::safety>)->Name("safety/parallel")->Arg(1 << 18);
BENCHMARK(forward)->Name("predictor/forward")->Arg(1)->Arg(64);

BENCHMARK_MAIN();
