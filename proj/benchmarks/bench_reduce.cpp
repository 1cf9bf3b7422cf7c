#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "embgeom/knn.hpp"
#include "embgeom/reduce.hpp"
#include "embgeom/rng.hpp"

using namespace embgeom;

namespace {

Eigen::MatrixXd gaussian_points(int n, int d, std::uint64_t seed) {
    RandomStream rng(seed);
    Eigen::MatrixXd pts(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) pts(i, j) = rng.normal();
    return pts;
}

}  // namespace

static void BM_FitPca(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int d = static_cast<int>(state.range(1));
    const Eigen::MatrixXd pts = gaussian_points(n, d, 3);
    for (auto _ : state) {
        auto space = fit_pca(pts, 0.9);
        benchmark::DoNotOptimize(space);
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_FitPca)
    ->Args({18, 768})    // gram route
    ->Args({324, 768})
    ->Args({5832, 64})   // covariance route
    ->Unit(benchmark::kMillisecond);

static void BM_Project(benchmark::State& state) {
    const Eigen::MatrixXd pts = gaussian_points(4096, 128, 5);
    const auto space = fit_pca(pts, 0.9);
    for (auto _ : state) {
        auto reduced = project(space, pts);
        benchmark::DoNotOptimize(reduced);
    }
}
BENCHMARK(BM_Project)->Unit(benchmark::kMillisecond);

static void BM_MeanNnDistance(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd pts = gaussian_points(n, 20, 7);
    for (auto _ : state) benchmark::DoNotOptimize(mean_nn_distance(pts));
}
BENCHMARK(BM_MeanNnDistance)->Arg(512)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
