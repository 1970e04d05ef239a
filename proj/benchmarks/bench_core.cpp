#include <benchmark/benchmark.h>

#include <random>

#include "cnls/config.hpp"
#include "cnls/reduction.hpp"

using namespace cnls;

namespace {

struct Bench {
    driver::RunConfig cfg = driver::RunConfig::defaults(2);
    potentials::PotentialSet pset = cfg.make_potentials();
    std::shared_ptr<const profile::GroundStateProfile> prof =
        std::make_shared<profile::GroundStateProfile>(profile::solve_profile(cfg.dim, cfg.p));
    reduce::Session session{pset, prof, cfg.Q0, 0.02, cfg.beta, cfg.session_options()};
};

Bench& fixture() {
    static Bench b;
    return b;
}

}  // namespace

static void BM_expression_eval(benchmark::State& state) {
    auto e = expr::Expression::parse("1 - 0.45*exp(-(x1^2 + x2^2))", 2);
    std::vector<double> x = {0.3, -0.2};
    for (auto _ : state) {
        benchmark::DoNotOptimize(e.eval(x));
        x[0] = -x[0];
    }
}
BENCHMARK(BM_expression_eval);

static void BM_profile_solve_2d(benchmark::State& state) {
    for (auto _ : state) {
        auto prof = profile::solve_profile(2, 3.0);
        benchmark::DoNotOptimize(prof.shoot_amplitude);
    }
}
BENCHMARK(BM_profile_solve_2d)->Unit(benchmark::kMillisecond);

static void BM_energy(benchmark::State& state) {
    auto& b = fixture();
    const auto& z = b.session.trial().fields;
    for (auto _ : state) benchmark::DoNotOptimize(field::energy(z, b.session.coefficients()).total);
}
BENCHMARK(BM_energy)->Unit(benchmark::kMillisecond);

static void BM_hess_apply(benchmark::State& state) {
    auto& b = fixture();
    std::mt19937_64 rng(1);
    auto d = reduce::random_smooth_pair(b.session.grid_ptr(), rng);
    const auto& z = b.session.trial().fields;
    for (auto _ : state)
        benchmark::DoNotOptimize(field::hess_apply(z, d, b.session.coefficients()).u[100]);
}
BENCHMARK(BM_hess_apply)->Unit(benchmark::kMillisecond);

static void BM_riesz_solve(benchmark::State& state) {
    auto& b = fixture();
    std::mt19937_64 rng(2);
    auto d = reduce::random_smooth_pair(b.session.grid_ptr(), rng);
    field::HelmholtzSolver helm(b.session.grid_ptr(), 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(helm.solve(d).u[100]);
}
BENCHMARK(BM_riesz_solve)->Unit(benchmark::kMillisecond);

static void BM_projected_linear_solve(benchmark::State& state) {
    auto& b = fixture();
    std::mt19937_64 rng(3);
    auto rhs = b.session.project(reduce::random_smooth_pair(b.session.grid_ptr(), rng));
    rhs.scale(1.0 / field::norm(rhs));
    for (auto _ : state) {
        auto sol = b.session.solve_projected_linear(rhs, 1e-6, 2000);
        benchmark::DoNotOptimize(sol.stats.iterations);
    }
}
BENCHMARK(BM_projected_linear_solve)->Unit(benchmark::kMillisecond);

static void BM_corrector(benchmark::State& state) {
    auto& b = fixture();
    for (auto _ : state) {
        auto cr = b.session.corrector();
        benchmark::DoNotOptimize(cr.w_norm);
    }
}
BENCHMARK(BM_corrector)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
