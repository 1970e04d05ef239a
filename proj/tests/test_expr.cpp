#include <doctest.h>

#include <cmath>
#include <random>

#include "cnls/expr.hpp"

using cnls::expr::EvalError;
using cnls::expr::Expression;
using cnls::expr::ParseError;

TEST_CASE("parse literals and arithmetic") {
    auto one = Expression::parse("1", 3);
    CHECK(one.eval(std::vector<double>{0, 0, 0}) == 1.0);
    CHECK(one.is_constant());

    auto e = Expression::parse("2 + 0.5*sin(x1)", 3);
    CHECK(e.eval(std::vector<double>{M_PI / 2, 0, 0}) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("parse errors carry byte offsets") {
    CHECK_THROWS_AS(Expression::parse("2 +", 3), ParseError);
    try {
        Expression::parse("2 +", 3);
    } catch (const ParseError& err) {
        CHECK(err.offset() == 3);
    }
    CHECK_THROWS_AS(Expression::parse("foo(x1)", 2), ParseError);
    CHECK_THROWS_AS(Expression::parse("x3 + 1", 2), ParseError);  // index exceeds dim
    CHECK_THROWS_AS(Expression::parse("", 2), ParseError);
    CHECK_THROWS_AS(Expression::parse("x1^x1", 2), ParseError);  // non-constant exponent
}

TEST_CASE("evaluation and domain errors") {
    auto e = Expression::parse("x1^2 + x2^2", 2);
    CHECK(e.eval(std::vector<double>{3, 4}) == doctest::Approx(25).epsilon(1e-15));

    auto id = Expression::parse("exp(0*x1)", 1);
    CHECK(id.eval(std::vector<double>{17.0}) == 1.0);

    auto sq = Expression::parse("sqrt(x1)", 2);
    CHECK_THROWS_AS(sq.eval(std::vector<double>{-1, 0}), EvalError);
    auto dv = Expression::parse("1/x1", 1);
    CHECK_THROWS_AS(dv.eval(std::vector<double>{0.0}), EvalError);
}

TEST_CASE("symbolic gradients match the examples") {
    auto sq = Expression::parse("x1^2", 1);
    CHECK(sq.gradient(std::vector<double>{3.0})[0] == doctest::Approx(6.0));

    auto c = Expression::parse("5", 2);
    auto g = c.gradient(std::vector<double>{1.0, 2.0});
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);

    auto sc = Expression::parse("sin(x1)*x2", 2);
    auto g2 = sc.gradient(std::vector<double>{0.0, 2.0});
    CHECK(g2[0] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(g2[1] == doctest::Approx(0.0).epsilon(1e-14));
}

namespace {

// random expression over a smooth-safe grammar
std::string random_tree(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, 6);
    std::uniform_real_distribution<double> cst(0.3, 2.0);
    std::uniform_int_distribution<int> var(1, 2);
    if (depth == 0 || pick(rng) == 0) {
        if (pick(rng) % 2 == 0) return "x" + std::to_string(var(rng));
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", cst(rng));
        return buf;
    }
    switch (pick(rng)) {
        case 1: return "(" + random_tree(rng, depth - 1) + " + " + random_tree(rng, depth - 1) + ")";
        case 2: return "(" + random_tree(rng, depth - 1) + " - " + random_tree(rng, depth - 1) + ")";
        case 3: return "(" + random_tree(rng, depth - 1) + ")*(" + random_tree(rng, depth - 1) + ")";
        case 4: return "sin(" + random_tree(rng, depth - 1) + ")";
        case 5: return "cos(" + random_tree(rng, depth - 1) + ")";
        case 6: return "tanh(" + random_tree(rng, depth - 1) + ")";
    }
    return "1";
}

}  // namespace

TEST_CASE("gradient agrees with central differences on a random corpus") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    int checked = 0;
    for (int k = 0; k < 20; ++k) {
        auto text = random_tree(rng, 3);
        auto e = Expression::parse(text, 2);
        std::vector<double> x = {pt(rng), pt(rng)};
        const auto grad = e.gradient(x);
        const double h = 1e-5;
        for (int a = 0; a < 2; ++a) {
            auto xp = x, xm = x;
            xp[static_cast<std::size_t>(a)] += h;
            xm[static_cast<std::size_t>(a)] -= h;
            const double fd = (e.eval(xp) - e.eval(xm)) / (2.0 * h);
            const double scale = std::max({1.0, std::abs(fd), std::abs(grad[static_cast<std::size_t>(a)])});
            CHECK(std::abs(fd - grad[static_cast<std::size_t>(a)]) / scale <= 1e-6);
            ++checked;
        }
    }
    CHECK(checked == 40);
}

TEST_CASE("pretty-print round trip") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pt(-2.0, 2.0);
    for (int k = 0; k < 10; ++k) {
        auto text = random_tree(rng, 3);
        auto e = Expression::parse(text, 2);
        auto round = Expression::parse(e.str(), 2);
        for (int j = 0; j < 10; ++j) {
            std::vector<double> x = {pt(rng), pt(rng)};
            const double a = e.eval(x), b = round.eval(x);
            CHECK(std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)));
        }
    }
    // derivative trees stay in-grammar and round-trip too
    auto e = Expression::parse("sqrt(1 + x1^2)*tanh(x2)/(2 + cos(x1))", 2);
    auto d = e.derivative(0);
    auto round = Expression::parse(d.str(), 2);
    std::vector<double> x = {0.37, -1.2};
    CHECK(round.eval(x) == doctest::Approx(d.eval(x)).epsilon(1e-14));
}
