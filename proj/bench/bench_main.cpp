#include "softproj/experiment.hpp"
#include "softproj/kernels.hpp"
#include "softproj/recursive.hpp"
#include "softproj/soft_projection.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace softproj;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed)
{
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n;
    return Matrix::NullaryExpr(rows, cols, [&] { return n(gen); });
}

// H H^T for a case-study sized data matrix (qL = 42).
void BM_gram_serial(benchmark::State& state)
{
    const Matrix H = random_matrix(42, state.range(0), 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::gram(H));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_gram_serial)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oN);

void BM_gram_parallel(benchmark::State& state)
{
    const Matrix H = random_matrix(42, state.range(0), 1);
    for (auto _ : state) benchmark::DoNotOptimize(kernels::gram(H));
    state.counters["threads"] = kernels::max_threads();
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_gram_parallel)->RangeMultiplier(4)->Range(256, 65536)->Complexity(benchmark::oN);

void BM_projector_direct(benchmark::State& state)
{
    const Matrix H = random_matrix(42, state.range(0), 2);
    const Matrix W = Matrix::Identity(42, 42);
    for (auto _ : state) benchmark::DoNotOptimize(soft_projector_direct(H, W, 0.1).P);
}
BENCHMARK(BM_projector_direct)->Arg(50)->Arg(200)->Arg(1000);

void BM_projector_covariance(benchmark::State& state)
{
    const Matrix H = random_matrix(42, state.range(0), 2);
    const Matrix W = Matrix::Identity(42, 42);
    for (auto _ : state) benchmark::DoNotOptimize(soft_projector_covariance(H, W, 0.1).P);
}
BENCHMARK(BM_projector_covariance)->Arg(50)->Arg(200)->Arg(1000);

// One rank-one update after initializing with D columns.
void BM_recursive_update(benchmark::State& state)
{
    const Index D = state.range(0);
    const Matrix H = random_matrix(42, D + 1, 3);
    const RecursiveProjector init = RecursiveProjector::init(Matrix(H.leftCols(D)), Matrix::Identity(42, 42));
    const Vector w = H.col(D);
    RecursiveProjector r = init;
    for (auto _ : state) {
        r.update(w);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_recursive_update)->Arg(100)->Arg(1000)->Arg(5000);

// A small validation sweep through the parallel campaign loop.
void BM_validation_batch(benchmark::State& state)
{
    experiment::ExperimentConfig c;
    c.validation_realizations = 8;
    c.snr_list = {10.0};
    c.lambda_g_grid = experiment::logspace(10.0, 1e7, 4);
    c.delta_grid = experiment::logspace(1e-3, 1e3, 4);
    c.jobs = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(experiment::run_validation(c));
}
BENCHMARK(BM_validation_batch)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
