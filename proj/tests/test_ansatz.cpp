#include <doctest.h>

#include <cmath>
#include <random>

#include "cnls/ansatz.hpp"
#include "cnls/numeric.hpp"

using namespace cnls;
using ansatz::CutoffSpec;

TEST_CASE("placement geometry") {
    auto pl = ansatz::place({0.3, 0.0, 0.0}, 0.04);
    CHECK(pl.Qprime[0] == doctest::Approx(0.5));
    CHECK(pl.P[0] == doctest::Approx(7.5));
    CHECK(pl.Pprime[0] == doctest::Approx(12.5));
    CHECK(pl.peak_separation() == doctest::Approx(5.0));

    auto pl2 = ansatz::place({0.0, 0.0, 0.0}, 0.01);
    CHECK(pl2.peak_separation() == doctest::Approx(10.0).epsilon(1e-14));

    // at eps = 1e-4 the supports are disjoint: |P-P'| = 100 > 4 eps^{-1/4} = 40
    auto pl3 = ansatz::place({0.0}, 1e-4);
    CHECK(pl3.peak_separation() > 4.0 * std::pow(1e-4, -0.25));

    potentials::Box box{{-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4}};
    CHECK_THROWS_AS(ansatz::place({0.3, 0.0, 0.0}, 0.04, &box), std::domain_error);  // Q' leaves box
    CHECK_THROWS_AS(ansatz::place({0.5, 0.0, 0.0}, 0.04, &box), std::domain_error);
    CHECK_NOTHROW(ansatz::place({0.1, 0.0, 0.0}, 0.04, &box));
}

TEST_CASE("cutoff profile and gradient bound") {
    const double eps = 1e-4;
    auto cut = CutoffSpec::make(eps);
    CHECK(cut.inner_radius == doctest::Approx(10.0));
    CHECK(cut.outer_radius == doctest::Approx(20.0));

    CHECK(ansatz::cutoff_value(5.0, cut) == 1.0);
    CHECK(ansatz::cutoff_value(25.0, cut) == 0.0);
    CHECK(ansatz::cutoff_value(15.0, cut) == doctest::Approx(0.5).epsilon(1e-14));

    std::vector<double> x = {3.0, 4.0, 0.0};
    CHECK(ansatz::cutoff_value(x, cut) == 1.0);

    // finite-difference gradient magnitude at random radii
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> rad(0.0, 25.0);
    const double bound = 2.0 * std::pow(eps, 0.25);
    const double fd = 1e-6;
    for (int k = 0; k < 200; ++k) {
        const double r = rad(rng);
        const double g = (ansatz::cutoff_value(r + fd, cut) - ansatz::cutoff_value(r - fd, cut)) /
                         (2.0 * fd);
        CHECK(std::abs(g) <= bound + 1e-8);
    }
    CHECK(ansatz::cutoff_gradient_bound(cut) <= bound);
}

namespace {

struct Fixture {
    potentials::PotentialSet pset;
    std::shared_ptr<const profile::GroundStateProfile> prof;
    ansatz::AnsatzBuilder builder;

    explicit Fixture(const std::string& j1 = "1", int dim = 2, double p = 3.0)
        : pset(potentials::PotentialSet::from_strings(j1, "1", j1, "1", dim)),
          prof(std::make_shared<profile::GroundStateProfile>(profile::solve_profile(dim, p))),
          builder(&pset, prof) {}
};

}  // namespace

TEST_CASE("ansatz peaks and support") {
    Fixture fx;  // constant potentials
    const double eps = 0.01;
    auto pl = ansatz::place({0.0, 0.0}, eps);
    auto grid = field::make_grid(pl, 8.0, 0.25);
    auto pair = fx.builder.build(pl, grid);

    // max of u equals W(0) within interpolation tolerance
    double umax = 0.0;
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < pair.fields.u.size(); ++i)
        if (pair.fields.u[i] > umax) {
            umax = pair.fields.u[i];
            argmax = i;
        }
    CHECK(std::abs(umax - fx.prof->shoot_amplitude) <= 1e-4);

    // peak within one grid cell of P
    double x[3];
    grid->coords(argmax, x);
    CHECK(std::abs(x[0] - pl.P[0]) <= grid->h + 1e-12);
    CHECK(std::abs(x[1] - pl.P[1]) <= grid->h + 1e-12);

    // support: exactly zero at nodes with |x - P| >= outer radius
    auto cut = CutoffSpec::make(eps);
    for (std::size_t i = 0; i < grid->total; ++i) {
        grid->coords(i, x);
        const double r = std::hypot(x[0] - pl.P[0], x[1] - pl.P[1]);
        if (r >= cut.outer_radius) CHECK(pair.fields.u[i] == 0.0);
    }

    // amplitude scaling: J1 = 4 J2 = 1 at p = 2 doubles the peak
    Fixture fx4("4", 2, 2.0);
    auto pair4 = fx4.builder.build(pl, grid);
    double umax4 = 0.0;
    for (double v : pair4.fields.u) umax4 = std::max(umax4, v);
    CHECK(std::abs(umax4 - 2.0 * fx4.prof->shoot_amplitude) <= 1e-3);
}

TEST_CASE("disjoint supports give exactly zero overlap (1d, small eps)") {
    Fixture fx("1", 1, 2.0);
    const double eps = 1e-4;
    auto pl = ansatz::place({0.0}, eps);
    auto grid = field::make_grid(pl, 42.0, 0.5);
    auto pair = fx.builder.build(pl, grid);
    CHECK(field::overlap(pair.fields, 2.0) == 0.0);
}

TEST_CASE("overlap over eps decreases along the schedule") {
    Fixture fx;
    std::vector<double> vals;
    for (double eps : {0.04, 0.02, 0.01, 0.005}) {
        auto pl = ansatz::place({0.0, 0.0}, eps);
        auto grid = field::make_grid(pl, std::max(8.0, 2.0 * std::pow(eps, -0.25) + 0.6), 0.3);
        auto pair = fx.builder.build(pl, grid);
        vals.push_back(field::overlap(pair.fields, 3.0) / eps);
    }
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) CHECK(vals[i + 1] < vals[i]);
}

TEST_CASE("tangent basis") {
    Fixture fx("1 - 0.45*exp(-(x1^2 + x2^2))");
    const double eps = 0.02;
    auto pl = ansatz::place({0.0, 0.0}, eps);
    auto grid = field::make_grid(pl, 8.0, 0.25);
    auto tb = fx.builder.tangent_basis(pl, grid, 1e-3);
    REQUIRE(tb.ortho.size() == 2);

    // Gram matrix is the identity
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(std::abs(field::inner(tb.ortho[i], tb.ortho[j]) - (i == j ? 1.0 : 0.0)) <= 1e-10);

    // potentials even in x2 and Q on the x1-axis: the x2 element is odd in x2,
    // so its pairing with any even grid function vanishes
    field::FieldPair even(grid);
    double x[3];
    for (std::size_t i = 0; i < grid->total; ++i) {
        grid->coords(i, x);
        even.u[i] = std::exp(-0.1 * ((x[0] - pl.P[0]) * (x[0] - pl.P[0]) + x[1] * x[1]));
        even.v[i] = even.u[i];
    }
    even.zero_boundary();
    even.scale(1.0 / field::norm(even));
    CHECK(std::abs(field::inner(tb.raw[1], even)) / field::norm(tb.raw[1]) <= 1e-10);
}

TEST_CASE("tangent basis matches -d/dx up to O(eps) + O(step^2)") {
    Fixture fx("1 - 0.45*exp(-(x1^2 + x2^2))");
    std::vector<double> le, lr;
    for (double eps : {0.04, 0.02, 0.01}) {
        auto pl = ansatz::place({0.1, 0.0}, eps);
        auto grid = field::make_grid(pl, std::max(8.0, 2.0 * std::pow(eps, -0.25) + 0.6), 0.25);
        auto tb = fx.builder.tangent_basis(pl, grid, 1e-3);

        // semi-analytic -(d/dx1) of the built pair
        const auto cut = CutoffSpec::make(eps);
        const auto vq = fx.pset.values(pl.Q);
        field::FieldPair ref(grid);
        double x[3];
        auto fill = [&](std::vector<double>& dst, const std::vector<double>& center, double J1,
                        double J2) {
            const double amp = std::pow(J1 / J2, 1.0 / (2.0 * fx.prof->p - 2.0));
            const double wid = std::sqrt(J1);
            for (std::size_t i = 0; i < grid->total; ++i) {
                grid->coords(i, x);
                const double dx = x[0] - center[0], dy = x[1] - center[1];
                const double r = std::hypot(dx, dy);
                if (r >= cut.outer_radius || r < 1e-14) continue;
                const double chi = ansatz::cutoff_value(r, cut);
                const double dchi = (ansatz::cutoff_value(r + 1e-7, cut) -
                                     ansatz::cutoff_value(r - 1e-7, cut)) / 2e-7;
                const double W = fx.prof->value(wid * r);
                const double dW = fx.prof->deriv(wid * r);
                dst[i] = -(dx / r) * (dchi * amp * W + chi * amp * wid * dW);
            }
        };
        fill(ref.u, pl.P, vq[0], vq[1]);
        fill(ref.v, pl.Pprime, vq[2], vq[3]);
        ref.zero_boundary();

        field::FieldPair diff = tb.raw[0];
        diff.axpy(-1.0, ref);
        le.push_back(std::log(eps));
        lr.push_back(std::log(field::norm(diff)));
    }
    const auto fit = cnls::num::fit_line(le, lr);
    CHECK(fit.slope >= 0.7);  // O(eps) residual, step^2 contribution negligible
}
