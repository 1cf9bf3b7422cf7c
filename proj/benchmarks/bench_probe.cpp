#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "embgeom/probe.hpp"
#include "embgeom/rng.hpp"
#include "embgeom/surface.hpp"

using namespace embgeom;

namespace {

Eigen::MatrixXd shell_points(int n, int r, std::uint64_t seed) {
    RandomStream rng(seed);
    Eigen::MatrixXd pts(n, r);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v(r);
        for (int j = 0; j < r; ++j) v[j] = rng.normal();
        pts.row(i) = v.normalized().transpose();
    }
    return pts;
}

}  // namespace

static void BM_ProjectToSurface(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const Eigen::MatrixXd cloud = shell_points(512, r, 5);
    auto [model, diag] = fit_implicit(cloud, 2);
    ProjectionSettings settings;
    settings.max_step = 0.5;
    RandomStream rng(6);
    Eigen::VectorXd z0(r);
    for (int j = 0; j < r; ++j) z0[j] = 1.5 * rng.normal();
    for (auto _ : state) {
        auto res = project_to_surface(model, z0, settings);
        benchmark::DoNotOptimize(res);
    }
}
BENCHMARK(BM_ProjectToSurface)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

static void BM_SampleBarycentric(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Eigen::MatrixXd cloud = shell_points(n, 10, 7);
    for (auto _ : state) {
        auto samples = sample_barycentric(cloud, 1.0, 64, 3);
        benchmark::DoNotOptimize(samples);
    }
}
BENCHMARK(BM_SampleBarycentric)->Arg(64)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

static void BM_GenerateSurfaceBased(benchmark::State& state) {
    const int count = static_cast<int>(state.range(0));
    const Eigen::MatrixXd cloud = shell_points(512, 10, 9);
    auto [model, diag] = fit_implicit(cloud, 2);
    SurfaceGenerationConfig config;
    for (auto _ : state) {
        auto batch = generate_surface_based(cloud, model, count, config, 11);
        benchmark::DoNotOptimize(batch);
    }
}
BENCHMARK(BM_GenerateSurfaceBased)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
