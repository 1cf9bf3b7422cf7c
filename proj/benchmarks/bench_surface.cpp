#include <benchmark/benchmark.h>

#include <Eigen/Core>

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

ImplicitPolyModel shell_model(int r, int degree) {
    auto [model, diag] = fit_implicit(shell_points(1024, r, 7), degree);
    return model;
}

}  // namespace

static void BM_BuildBasis(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const int degree = static_cast<int>(state.range(1));
    for (auto _ : state) {
        auto basis = build_basis(r, degree);
        benchmark::DoNotOptimize(basis);
    }
}
BENCHMARK(BM_BuildBasis)->Args({10, 2})->Args({29, 2})->Args({29, 3})->Args({40, 3});

static void BM_FitImplicit(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const int r = static_cast<int>(state.range(1));
    const int degree = static_cast<int>(state.range(2));
    const Eigen::MatrixXd pts = shell_points(n, r, 11);
    for (auto _ : state) {
        auto fitted = fit_implicit(pts, degree);
        benchmark::DoNotOptimize(fitted);
    }
    state.SetComplexityN(n);
}
BENCHMARK(BM_FitImplicit)
    ->Args({256, 5, 2})
    ->Args({1024, 10, 2})
    ->Args({4096, 20, 2})
    ->Args({1024, 10, 3})
    ->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const auto model = shell_model(r, 2);
    RandomStream rng(3);
    Eigen::VectorXd z(r);
    for (int j = 0; j < r; ++j) z[j] = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(evaluate(model, z));
}
BENCHMARK(BM_Evaluate)->Arg(10)->Arg(20)->Arg(37);

static void BM_Gradient(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const auto model = shell_model(r, 2);
    RandomStream rng(3);
    Eigen::VectorXd z(r);
    for (int j = 0; j < r; ++j) z[j] = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(gradient(model, z));
}
BENCHMARK(BM_Gradient)->Arg(10)->Arg(20)->Arg(37);

static void BM_Hessian(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const auto model = shell_model(r, 2);
    RandomStream rng(3);
    Eigen::VectorXd z(r);
    for (int j = 0; j < r; ++j) z[j] = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(hessian(model, z));
}
BENCHMARK(BM_Hessian)->Arg(10)->Arg(20)->Arg(37);
