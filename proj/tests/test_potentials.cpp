#include <doctest.h>

#include <cmath>
#include <random>

#include "cnls/potentials.hpp"

using namespace cnls::potentials;

namespace {

PotentialSet constants(double j1 = 1, double j2 = 1, double k1 = 1, double k2 = 1, int dim = 3) {
    auto s = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    return PotentialSet::from_strings(s(j1), s(j2), s(k1), s(k2), dim);
}

}  // namespace

TEST_CASE("gamma formula") {
    std::vector<double> q = {0.1, -0.2, 0.3};
    CHECK(gamma(constants(), q) == doctest::Approx(2.0));
    CHECK(gamma(constants(4, 1, 1, 2), q) == doctest::Approx(2.5));

    auto pset = PotentialSet::from_strings("1 + x1^2", "1", "1", "1", 3);
    CHECK(gamma(pset, std::vector<double>{0, 0, 0}) == doctest::Approx(2.0));
    CHECK(gamma(pset, std::vector<double>{1, 0, 0}) == doctest::Approx(std::sqrt(2.0) + 1.0));

    auto neg = PotentialSet::from_strings("x1", "1", "1", "1", 3);
    CHECK_THROWS_AS(gamma(neg, std::vector<double>{-1, 0, 0}), std::domain_error);
}

TEST_CASE("gamma_bar generalizes gamma") {
    std::vector<double> q = {0.2, 0.4, -0.1};
    CHECK(gamma_bar(constants(), q, 2.0, 3) == doctest::Approx(2.0));
    CHECK(gamma_bar(constants(4, 1, 1, 1), q, 2.0, 3) == doctest::Approx(3.0));

    // p=2, N=3 equals the classic landscape for generic potentials
    auto pset = PotentialSet::from_strings("1 + 0.3*sin(x1) + 0.1*x2^2", "2 + cos(x3)",
                                           "1.5 + 0.2*tanh(x1)", "1 + 0.5*exp(-x2^2)", 3);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    for (int k = 0; k < 25; ++k) {
        std::vector<double> x = {u(rng), u(rng), u(rng)};
        const double a = gamma(pset, x);
        const double b = gamma_bar(pset, x, 2.0, 3);
        CHECK(std::abs(a - b) <= 1e-12 * std::abs(a));
    }

    CHECK_THROWS_AS(gamma_bar(constants(), q, 3.0, 3), std::invalid_argument);  // critical p
    CHECK_THROWS_AS(gamma_bar(constants(), q, 0.5, 2), std::invalid_argument);
    CHECK_NOTHROW(gamma_bar(constants(1, 1, 1, 1, 2), std::vector<double>{0, 0}, 3.0, 2));
}

TEST_CASE("hypothesis validation") {
    Box box{{-4, -4, -4}, {4, 4, 4}};

    std::array<Bounds, 4> b;
    b.fill({0.4, 100.0});
    auto good = PotentialSet::from_strings("1 + 0.5*sin(x1)", "1", "1", "1", 3, b);
    auto rep = validate_hypotheses(good, box, 9);
    CHECK(rep.pass);
    CHECK(rep.min_value[0] == doctest::Approx(0.5).epsilon(1e-6));

    std::array<Bounds, 4> b2;
    b2.fill({0.1, 100.0});
    auto bad = PotentialSet::from_strings("x1", "1", "1", "1", 3, b2);
    auto rep2 = validate_hypotheses(bad, box, 9);
    CHECK_FALSE(rep2.pass);
    CHECK(!rep2.violations.empty());
    for (const auto& v : rep2.violations)
        if (v.which == 0) CHECK(v.point[0] <= 0.1);

    auto flat = constants();
    auto rep3 = validate_hypotheses(flat, box, 5);
    CHECK(rep3.pass);
    CHECK(rep3.min_value[0] == 1.0);
    CHECK(rep3.max_value[0] == 1.0);
    CHECK(rep3.max_gradient_norm[0] == 0.0);

    CHECK_THROWS_AS(validate_hypotheses(flat, box, 1), std::invalid_argument);
}

TEST_CASE("critical points: single radial minimum") {
    auto pset = PotentialSet::from_strings("1 + x1^2 + x2^2 + x3^2", "1", "1", "1", 3);
    Box box{{-1, -1, -1}, {1, 1, 1}};
    auto rep = find_critical_points(pset, box, GammaSpec::make_classic());
    REQUIRE(rep.critical_points.size() == 1);
    const auto& cp = rep.critical_points[0];
    CHECK(cp.kind == CritKind::Min);
    for (double x : cp.q) CHECK(std::abs(x) <= 1e-6);
    CHECK(cp.grad_norm <= 1e-8);

    // strict local minimality on a probe sphere of radius isolation/2
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0, 1);
    const double r = cp.isolation_radius / 2;
    const double base = gamma(pset, cp.q);
    for (int k = 0; k < 18; ++k) {
        std::vector<double> dir = {n(rng), n(rng), n(rng)};
        double nn = std::hypot(dir[0], std::hypot(dir[1], dir[2]));
        std::vector<double> probe = cp.q;
        for (int a = 0; a < 3; ++a) probe[static_cast<std::size_t>(a)] += r * dir[static_cast<std::size_t>(a)] / nn;
        CHECK(gamma(pset, probe) > base);
    }
}

TEST_CASE("critical points: constant landscape is degenerate") {
    auto pset = constants();
    Box box{{-1, -1, -1}, {1, 1, 1}};
    auto rep = find_critical_points(pset, box, GammaSpec::make_classic());
    CHECK(rep.degenerate_landscape);
    CHECK(rep.critical_points.empty());
}

TEST_CASE("critical points: double well against a dense-lattice oracle") {
    auto pset = PotentialSet::from_strings("1 + (x1^2 - 0.25)^2", "1", "1", "1", 3);
    Box box{{-1, -1, -1}, {1, 1, 1}};
    auto rep = find_critical_points(pset, box, GammaSpec::make_classic());

    // oracle: dense 1-d lattice scan along x1 (the landscape only varies in x1)
    double best_lo = 0, best_hi = 0, vlo = 1e30, vhi = 1e30;
    for (int i = 0; i <= 2000; ++i) {
        const double x = -1.0 + 2.0 * i / 2000.0;
        std::vector<double> q = {x, 0, 0};
        const double v = gamma(pset, q);
        if (x < 0 && v < vlo) { vlo = v; best_lo = x; }
        if (x > 0 && v < vhi) { vhi = v; best_hi = x; }
    }
    CHECK(best_lo == doctest::Approx(-0.5).epsilon(0.01));
    CHECK(best_hi == doctest::Approx(0.5).epsilon(0.01));

    int minima = 0, saddles_or_degenerate = 0;
    bool near_lo = false, near_hi = false, near_zero = false;
    for (const auto& cp : rep.critical_points) {
        if (cp.kind == CritKind::Min) {
            ++minima;
            if (std::abs(cp.q[0] - best_lo) < 0.05) near_lo = true;
            if (std::abs(cp.q[0] - best_hi) < 0.05) near_hi = true;
        } else {
            ++saddles_or_degenerate;
            if (std::abs(cp.q[0]) < 0.05) near_zero = true;
        }
    }
    CHECK(minima == 2);
    CHECK(near_lo);
    CHECK(near_hi);
    CHECK(saddles_or_degenerate >= 1);
    CHECK(near_zero);
}

TEST_CASE("landscape report serializes") {
    auto pset = PotentialSet::from_strings("1 + x1^2 + x2^2", "1", "1", "1", 2);
    Box box{{-1, -1}, {1, 1}};
    auto rep = find_critical_points(pset, box, GammaSpec::general(2.0, 2));
    auto json = rep.to_json();
    CHECK(json.find("critical_points") != std::string::npos);
    CHECK(json.find("min") != std::string::npos);
}
