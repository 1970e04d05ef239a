#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "cnls/numeric.hpp"
#include "cnls/profile.hpp"

using namespace cnls::profile;

TEST_CASE("1d ground state matches sqrt(2) sech") {
    const auto prof = solve_profile(1, 2.0);
    CHECK(std::abs(prof.shoot_amplitude - std::sqrt(2.0)) <= 1e-6);

    double sup = 0.0;
    for (std::size_t i = 0; i < prof.r.size(); ++i) {
        if (prof.r[i] > 10.0) break;
        sup = std::max(sup, std::abs(prof.values[i] - std::sqrt(2.0) / std::cosh(prof.r[i])));
    }
    CHECK(sup <= 1e-5);

    CHECK(moment(prof, 2.0) == doctest::Approx(4.0).epsilon(1e-4));
    CHECK(moment(prof, 4.0) == doctest::Approx(16.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("admissibility") {
    CHECK_THROWS_AS(solve_profile(3, 3.0), std::invalid_argument);  // 2p = 2N/(N-2)
    CHECK_THROWS_AS(solve_profile(3, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(solve_profile(4, 2.0), std::invalid_argument);
    CHECK_NOTHROW(solve_profile(2, 3.0));
}

TEST_CASE("profile invariants") {
    for (auto [N, p] : {std::pair{2, 3.0}, std::pair{3, 2.0}}) {
        const auto prof = solve_profile(N, p);

        // strictly positive, strictly decreasing, decaying
        for (std::size_t i = 0; i + 1 < prof.values.size(); ++i) {
            CHECK(prof.values[i] > 0.0);
            CHECK(prof.values[i + 1] < prof.values[i]);
        }
        CHECK(prof.values.back() <= 1e-8);
        CHECK(std::abs(prof.derivative_values.front()) <= 1e-12);

        // Pohozaev/Nehari identity of the equation
        const double lhs = gradient_moment(prof) + moment(prof, 2.0);
        const double rhs = moment(prof, 2.0 * p);
        CHECK(std::abs(lhs - rhs) / rhs <= 1e-4);

        // second-order FD residual of the radial ODE
        const auto& w = prof.values;
        const double h = prof.step;
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 1; i + 1 < w.size(); ++i) {
            const double d2 = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
            const double d1 = (w[i + 1] - w[i - 1]) / (2.0 * h);
            const double res = -d2 - (N - 1) / prof.r[i] * d1 + w[i] - std::pow(w[i], 2.0 * p - 1.0);
            acc += res * res;
            ++cnt;
        }
        CHECK(std::sqrt(acc / static_cast<double>(cnt)) <= 1e-5);
    }
}

TEST_CASE("rescaling") {
    auto prof = std::make_shared<GroundStateProfile>(solve_profile(3, 2.0));

    auto ident = rescale_profile(prof, 1.0, 1.0, {0, 0, 0});
    CHECK(ident.amplitude == doctest::Approx(1.0));
    CHECK(ident.width == doctest::Approx(1.0));
    CHECK(ident.peak_value() == doctest::Approx(prof->shoot_amplitude));

    auto rp = rescale_profile(prof, 4.0, 1.0, {0, 0, 0});
    CHECK(rp.amplitude == doctest::Approx(2.0));
    CHECK(rp.width == doctest::Approx(2.0));

    // un-rescaling recovers the base values
    for (double r : {0.0, 0.37, 1.9, 5.5}) {
        const double back = rp.value_at_radius(r / rp.width) / rp.amplitude;
        CHECK(std::abs(back - prof->value(r)) <= 1e-12 * std::max(1.0, prof->value(r)));
    }

    CHECK_THROWS_AS(rescale_profile(prof, -1.0, 1.0, {0, 0, 0}), std::domain_error);
}

TEST_CASE("rescaled substitution residual converges at second order") {
    // (J1, J2) = (4, 1): U = 2 W(2r) solves -Lap U + 4U - U^3 = 0
    auto prof = std::make_shared<GroundStateProfile>(solve_profile(3, 2.0));
    auto rp = rescale_profile(prof, 4.0, 1.0, {0, 0, 0});

    auto rms = [&](double hs) {
        double acc = 0.0;
        std::size_t cnt = 0;
        const auto n = static_cast<std::size_t>(std::floor(6.0 / hs));
        for (std::size_t i = 2; i + 2 < n; ++i) {
            const double r = static_cast<double>(i) * hs;
            const double um = rp.value_at_radius(r - hs);
            const double u0 = rp.value_at_radius(r);
            const double up = rp.value_at_radius(r + hs);
            const double d2 = (up - 2.0 * u0 + um) / (hs * hs);
            const double d1 = (up - um) / (2.0 * hs);
            const double res = -d2 - 2.0 / r * d1 + 4.0 * u0 - u0 * u0 * u0;
            acc += res * res;
            ++cnt;
        }
        return std::sqrt(acc / static_cast<double>(cnt));
    };

    std::vector<double> hs = {0.2, 0.1, 0.05, 0.025}, lx, ly;
    for (double h : hs) {
        lx.push_back(std::log(h));
        ly.push_back(std::log(rms(h)));
    }
    const auto fit = cnls::num::fit_line(lx, ly);
    CHECK(fit.slope >= 1.8);
    CHECK(fit.slope <= 2.2);
}

TEST_CASE("limit energies") {
    // 1d analog: F = 1/4 int W^4 = 4/3
    const auto p1 = solve_profile(1, 2.0);
    const auto e1 = limit_energy(p1, 1.0, 1.0);
    CHECK(e1.direct_quadrature == doctest::Approx(4.0 / 3.0).epsilon(1e-4));
    CHECK(e1.nehari_value == doctest::Approx(4.0 / 3.0).epsilon(1e-4));

    // 3d: direct quadrature equals the Nehari value to 4 digits
    const auto p3 = solve_profile(3, 2.0);
    const auto e3 = limit_energy(p3, 1.0, 1.0);
    CHECK(std::abs(e3.direct_quadrature - e3.nehari_value) / e3.nehari_value <= 1e-4);

    // scaling law: (J1, J2) = (4, 1) vs (1, 1) gives ratio 4^{1/2} = 2 at N = 3
    const auto e4 = limit_energy(p3, 4.0, 1.0);
    CHECK(e4.direct_quadrature / e3.direct_quadrature == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("c0 candidates") {
    const auto p1 = solve_profile(1, 2.0);
    const auto [paper, nehari] = c0_candidates(p1);
    CHECK(paper == doctest::Approx(8.0 / 3.0).epsilon(1e-4));
    CHECK(nehari == doctest::Approx(4.0 / 3.0).epsilon(1e-4));

    const auto p3 = solve_profile(3, 2.0);
    const auto [paper3, nehari3] = c0_candidates(p3);
    CHECK(paper3 == doctest::Approx(2.0 * nehari3).epsilon(1e-14));

    const auto p23 = solve_profile(2, 3.0);
    CHECK_THROWS_AS(c0_candidates(p23), std::invalid_argument);
}

TEST_CASE("table round trip") {
    const auto prof = solve_profile(1, 2.0);
    const std::string path = "/tmp/cnls_test_profile.dat";
    save_table(prof, path);
    const auto back = load_table(path);
    CHECK(back.dim == prof.dim);
    CHECK(back.p == prof.p);
    CHECK(back.shoot_amplitude == doctest::Approx(prof.shoot_amplitude).epsilon(1e-15));
    REQUIRE(back.values.size() == prof.values.size());
    CHECK(back.values[100] == doctest::Approx(prof.values[100]).epsilon(1e-15));
    std::remove(path.c_str());
}
