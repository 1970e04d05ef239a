#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "cnls/ansatz.hpp"
#include "cnls/field.hpp"
#include "cnls/numeric.hpp"
#include "cnls/reduction.hpp"

using namespace cnls;
using field::FieldPair;

namespace {

potentials::PotentialSet bumps2d() {
    return potentials::PotentialSet::from_strings("1 - 0.45*exp(-(x1^2 + x2^2))", "1",
                                                  "1 - 0.45*exp(-(x1^2 + x2^2))", "1", 2);
}

}  // namespace

TEST_CASE("make_grid arithmetic follows the sizing formula") {
    auto pl = ansatz::place({0.0, 0.0}, 0.01);
    auto g = field::make_grid(pl, 8.0, 0.5);
    // axis-1 extent 10 + 16 = 26 -> 53 nodes at h = 0.5
    CHECK(g->n[0] == 53);
    CHECK(g->n[1] == 33);
    CHECK(g->hi[0] - g->lo[0] == doctest::Approx(26.0));

    CHECK_THROWS(field::make_grid(pl, 8.0, -0.25));
    CHECK_THROWS_AS(field::make_grid(pl, 3.0, 0.5), std::invalid_argument);  // supports clipped
    CHECK_THROWS_AS(field::make_grid(pl, 8.0, 0.25, 1000), std::runtime_error);  // node cap
}

TEST_CASE("zero fields have zero energy; coupling sign") {
    auto pset = bumps2d();
    auto g = field::make_box_grid(2, {-4, -4, 0}, {4, 4, 0}, 0.25);
    auto coeffs = field::sample_coefficients(pset, g, 0.1, -0.5, 2.0);

    FieldPair zero(g);
    auto e = field::energy(zero, coeffs);
    CHECK(e.jpart == 0.0);
    CHECK(e.kpart == 0.0);
    CHECK(e.coupling == 0.0);
    CHECK(e.total == 0.0);

    std::mt19937_64 rng(1);
    auto fp = reduce::random_smooth_pair(g, rng);
    for (auto& x : fp.u) x = std::abs(x);
    for (auto& x : fp.v) x = std::abs(x);
    CHECK(field::energy(fp, coeffs).coupling >= 0.0);

    CHECK_THROWS_AS(field::sample_coefficients(pset, g, 0.1, +0.5, 2.0), std::invalid_argument);
    CHECK_NOTHROW(field::sample_coefficients(pset, g, 0.1, 0.0, 2.0));  // decoupled case allowed
}

TEST_CASE("gradient and hessian are exact derivatives of the energy") {
    auto pset = bumps2d();
    auto g = field::make_box_grid(2, {-4, -4, 0}, {4, 4, 0}, 0.25);
    std::mt19937_64 rng(2);

    for (double p : {2.0, 3.0, 1.7}) {
        auto coeffs = field::sample_coefficients(pset, g, 0.1, -0.5, p);
        auto base = reduce::random_smooth_pair(g, rng);
        if (p == 1.7)  // fractional powers: keep the base away from zero crossings
            for (std::size_t i = 0; i < base.u.size(); ++i) {
                base.u[i] = 0.5 + std::abs(base.u[i]);
                base.v[i] = 0.5 + std::abs(base.v[i]);
            }
        if (p == 1.7) base.zero_boundary();

        const auto grad = field::grad_residual(base, coeffs);
        const double t = 1e-5;
        for (int k = 0; k < 4; ++k) {
            auto d = reduce::random_smooth_pair(g, rng);
            d.scale(1.0 / field::norm(d));
            FieldPair plus = base, minus = base;
            plus.axpy(t, d);
            minus.axpy(-t, d);
            const double fd =
                (field::energy(plus, coeffs).total - field::energy(minus, coeffs).total) / (2.0 * t);
            const double exact = field::inner_l2(grad, d);
            CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));

            auto gp = field::grad_residual(plus, coeffs);
            gp.axpy(-1.0, field::grad_residual(minus, coeffs));
            gp.scale(1.0 / (2.0 * t));
            auto hd = field::hess_apply(base, d, coeffs);
            const double hn = field::norm_l2(hd);
            gp.axpy(-1.0, hd);
            CHECK(field::norm_l2(gp) <= 1e-5 * std::max(1.0, hn));
        }
    }
}

TEST_CASE("hessian symmetry and Dirichlet invariance") {
    auto pset = bumps2d();
    auto g = field::make_box_grid(2, {-4, -4, 0}, {4, 4, 0}, 0.25);
    auto coeffs = field::sample_coefficients(pset, g, 0.1, -0.5, 2.0);
    std::mt19937_64 rng(3);

    auto base = reduce::random_smooth_pair(g, rng);
    auto d1 = reduce::random_smooth_pair(g, rng);
    auto d2 = reduce::random_smooth_pair(g, rng);
    d1.scale(1.0 / field::norm(d1));
    d2.scale(1.0 / field::norm(d2));

    const double a = field::inner_l2(field::hess_apply(base, d1, coeffs), d2);
    const double b = field::inner_l2(field::hess_apply(base, d2, coeffs), d1);
    CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)));

    auto grad = field::grad_residual(base, coeffs);
    auto hd = field::hess_apply(base, d1, coeffs);
    for (std::size_t idx = 0; idx < g->total; ++idx) {
        if (!g->is_boundary(idx)) continue;
        CHECK(grad.u[idx] == 0.0);
        CHECK(grad.v[idx] == 0.0);
        CHECK(hd.u[idx] == 0.0);
        CHECK(hd.v[idx] == 0.0);
    }
}

TEST_CASE("overlap quadrature") {
    auto g = field::make_box_grid(2, {-2, -2, 0}, {2, 2, 0}, 0.25);
    FieldPair fp(g);

    // u = v = 1 on a unit-volume interior patch: 4x4 cells = 16 nodes
    const auto i0 = static_cast<std::size_t>(4), j0 = static_cast<std::size_t>(4);
    for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 4; ++i) {
            fp.u[g->index(i0 + i, j0 + j)] = 1.0;
            fp.v[g->index(i0 + i, j0 + j)] = 1.0;
        }
    CHECK(field::overlap(fp, 2.0) == doctest::Approx(1.0).epsilon(1e-14));

    // disjoint supports
    FieldPair dj(g);
    dj.u[g->index(3, 3)] = 2.0;
    dj.v[g->index(12, 12)] = 3.0;
    CHECK(field::overlap(dj, 2.0) == 0.0);
}

TEST_CASE("inner product basics") {
    auto g = field::make_box_grid(2, {-3, -3, 0}, {3, 3, 0}, 0.25);
    FieldPair zero(g);
    CHECK(field::norm(zero) == 0.0);

    std::mt19937_64 rng(4);
    for (int k = 0; k < 5; ++k) {
        auto a = reduce::random_smooth_pair(g, rng);
        auto b = reduce::random_smooth_pair(g, rng);
        CHECK(std::abs(field::inner(a, b)) <= field::norm(a) * field::norm(b) * (1.0 + 1e-12));
    }
}

TEST_CASE("energy converges at second order on a smooth pair") {
    auto pset = bumps2d();
    std::vector<double> hs = {0.4, 0.2, 0.1, 0.05}, es;
    for (double h : hs) {
        auto g = field::make_box_grid(2, {-6, -6, 0}, {6, 6, 0}, h);
        FieldPair fp(g);
        double x[3];
        for (std::size_t idx = 0; idx < g->total; ++idx) {
            g->coords(idx, x);
            fp.u[idx] = std::exp(-(x[0] * x[0] + x[1] * x[1]));
            fp.v[idx] = std::exp(-((x[0] - 1) * (x[0] - 1) + x[1] * x[1]));
        }
        fp.zero_boundary();
        auto coeffs = field::sample_coefficients(pset, g, 0.1, -0.5, 2.0);
        es.push_back(field::energy(fp, coeffs).total);
    }
    // |E(h) - E(h/2)| ~ h^2
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
        lx.push_back(std::log(hs[i]));
        ly.push_back(std::log(std::abs(es[i] - es[i + 1])));
    }
    const auto fit = num::fit_line(lx, ly);
    CHECK(fit.slope >= 1.8);
    CHECK(fit.slope <= 2.2);
}

TEST_CASE("helmholtz solve inverts the residual stencil") {
    // u = (-Lap+1)^{-1} f with constant unit potentials solves the decoupled
    // linear problem; grad_residual at (u, 0) with J2 = 0, beta = 0 returns f
    auto g = field::make_box_grid(2, {-3, -3, 0}, {3, 3, 0}, 0.2);
    auto pset = potentials::PotentialSet::from_strings("1", "0", "1", "0", 2);
    auto coeffs = field::sample_coefficients(pset, g, 0.1, 0.0, 2.0);

    std::mt19937_64 rng(5);
    auto f = reduce::random_smooth_pair(g, rng);
    field::HelmholtzSolver helm(g, 1.0);
    auto u = helm.solve(f);
    auto r = field::grad_residual(u, coeffs);
    r.axpy(-1.0, f);
    r.zero_boundary();  // f is nonzero only on the interior anyway
    CHECK(field::norm_l2(r) <= 1e-10 * field::norm_l2(f));
}

TEST_CASE("snapshot round trip") {
    auto g = field::make_box_grid(2, {-2, -2, 0}, {2, 2, 0}, 0.25);
    std::mt19937_64 rng(6);
    auto fp = reduce::random_smooth_pair(g, rng);

    const std::string dir = "/tmp/cnls_test_snap";
    field::save_snapshot(fp, dir, "probe", 0.01, -0.5, 2.0, {"1", "1", "1", "1"});
    auto back = field::load_snapshot(dir, "probe");
    REQUIRE(back.u.size() == fp.u.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < fp.u.size(); ++i)
        worst = std::max(worst, std::abs(back.u[i] - fp.u[i]) + std::abs(back.v[i] - fp.v[i]));
    CHECK(worst == 0.0);  // %.17g round-trips doubles exactly
    std::filesystem::remove_all(dir);
}
