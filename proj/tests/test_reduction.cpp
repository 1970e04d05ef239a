#include <doctest.h>

#include <cmath>
#include <random>

#include "cnls/config.hpp"
#include "cnls/reduction.hpp"

using namespace cnls;
using field::FieldPair;

namespace {

struct Lab {
    driver::RunConfig cfg;
    potentials::PotentialSet pset;
    std::shared_ptr<const profile::GroundStateProfile> prof;

    explicit Lab(int dim, bool constant_potentials = false, double grid_h = 0.0)
        : cfg(driver::RunConfig::defaults(dim)),
          pset((constant_potentials
                    ? potentials::PotentialSet::from_strings("1", "1", "1", "1", dim)
                    : cfg.make_potentials())),
          prof(std::make_shared<profile::GroundStateProfile>(profile::solve_profile(cfg.dim, cfg.p))) {
        if (grid_h > 0.0) cfg.grid_h = grid_h;
    }

    reduce::Session session(std::vector<double> Q, double eps) const {
        return reduce::Session(pset, prof, std::move(Q), eps, cfg.beta, cfg.session_options());
    }
};

}  // namespace

TEST_CASE("projection is exact and idempotent") {
    Lab lab(2);
    auto s = lab.session({0.0, 0.0}, 0.02);

    for (const auto& b : s.tangent()) {
        CHECK(field::norm(s.project(b)) <= 1e-10);
    }

    std::mt19937_64 rng(1);
    auto fp = reduce::random_smooth_pair(s.grid_ptr(), rng);
    auto p1 = s.project(fp);
    auto p2 = s.project(p1);
    FieldPair diff = p2;
    diff.axpy(-1.0, p1);
    CHECK(field::norm(diff) <= 1e-12 * std::max(1.0, field::norm(p1)));

    for (const auto& b : s.projection_basis())
        CHECK(std::abs(field::inner(p1, b)) <= 1e-10 * std::max(1.0, field::norm(p1)));
}

TEST_CASE("apply_L is linear and symmetric") {
    Lab lab(2);
    auto s = lab.session({0.0, 0.0}, 0.02);
    std::mt19937_64 rng(2);
    auto d1 = s.project(reduce::random_smooth_pair(s.grid_ptr(), rng));
    auto d2 = s.project(reduce::random_smooth_pair(s.grid_ptr(), rng));
    d1.scale(1.0 / field::norm(d1));
    d2.scale(1.0 / field::norm(d2));

    FieldPair lin = d1;
    lin.scale(2.0);
    lin.axpy(-3.0, d2);
    FieldPair lhs = s.apply_L(lin);
    FieldPair rhs = s.apply_L(d1);
    rhs.scale(2.0);
    rhs.axpy(-3.0, s.apply_L(d2));
    lhs.axpy(-1.0, rhs);
    CHECK(field::norm(lhs) <= 1e-10 * std::max(1.0, field::norm(rhs)));

    const double a = field::inner(s.apply_L(d1), d2);
    const double b = field::inner(d1, s.apply_L(d2));
    CHECK(std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)));
}

TEST_CASE("projected linear solves") {
    Lab lab(2);
    auto s = lab.session({0.0, 0.0}, 0.02);

    FieldPair zero(s.grid_ptr());
    auto r0 = s.solve_projected_linear(zero, 1e-8, 100);
    CHECK(field::norm(r0.x) == 0.0);

    std::mt19937_64 rng(3);
    auto rhs = s.project(reduce::random_smooth_pair(s.grid_ptr(), rng));
    rhs.scale(1.0 / field::norm(rhs));
    auto sol = s.solve_projected_linear(rhs, 1e-8, 1500);
    CHECK(sol.stats.converged);
    CHECK(sol.stats.iterations <= 1500);
    FieldPair back = s.apply_L(sol.x);
    back.axpy(-1.0, rhs);
    CHECK(field::norm(back) <= 1e-7);
}

TEST_CASE("invertibility proxy: smallest eigenvalue bounded away from zero") {
    Lab lab(2);
    double prev = 0.0;
    for (auto q : {std::vector<double>{0.0, 0.0}, std::vector<double>{0.2, 0.1}}) {
        auto s = lab.session(q, 0.02);
        const double lam = s.smallest_eigen_magnitude(5);
        CHECK(lam > 0.05);
        prev = lam;
    }
    (void)prev;
}

TEST_CASE("corrector converges with orthogonal small correction") {
    Lab lab(2);
    auto s = lab.session({0.0, 0.0}, 0.01);
    auto cr = s.corrector();
    CHECK(cr.converged);
    CHECK(cr.residual_norm <= 1e-8);
    CHECK(cr.max_tangent_overlap <= 1e-9);
    CHECK(cr.w_norm > 0.0);
    CHECK(cr.w_norm < 1.0);
}

TEST_CASE("corrector contraction evidence across eps") {
    Lab lab(2);
    double prev_first_ratio = 2.0;
    for (double eps : {0.04, 0.01}) {
        auto s = lab.session({0.0, 0.0}, eps);
        auto cr = s.corrector();
        REQUIRE(cr.converged);
        REQUIRE(!cr.contraction_ratios.empty());
        // the first recorded ratio reflects the frozen-map contraction
        CHECK(cr.contraction_ratios.front() < 1.0);
        CHECK(cr.contraction_ratios.front() < prev_first_ratio + 0.5);
        prev_first_ratio = cr.contraction_ratios.front();
    }
}

TEST_CASE("corrector uniqueness proxy at the 1d subcritical exponent") {
    Lab lab(1);
    REQUIRE(lab.cfg.p == 2.0);
    auto s = lab.session({0.0}, 0.01);

    std::mt19937_64 rng(4);
    auto w1 = reduce::random_smooth_pair(s.grid_ptr(), rng);
    auto w2 = reduce::random_smooth_pair(s.grid_ptr(), rng);
    w1.scale(0.01 / field::norm(w1));
    w2.scale(0.01 / field::norm(w2));

    auto c1 = s.corrector(&w1);
    auto c2 = s.corrector(&w2);
    REQUIRE(c1.converged);
    REQUIRE(c2.converged);
    FieldPair diff = c1.w;
    diff.axpy(-1.0, c2.w);
    CHECK(field::norm(diff) <= 1e-7);
}

TEST_CASE("reduced energy: translation invariance at constant potentials") {
    Lab lab(2, true);
    auto sA = lab.session({0.0, 0.0}, 0.02);
    auto sB = lab.session({0.04, 0.0}, 0.02);
    const double a = sA.reduced_energy().A_value;
    const double b = sB.reduced_energy().A_value;
    CHECK(std::abs(a - b) <= 1e-6 * std::abs(a));
}

TEST_CASE("reduced energy orders like the landscape") {
    Lab lab(2);
    auto s0 = lab.session({0.0, 0.0}, 0.02);
    auto s5 = lab.session({0.5, 0.0}, 0.02);
    const auto r0 = s0.reduced_energy();
    const auto r5 = s5.reduced_energy();
    CHECK(r5.gamma_value > r0.gamma_value);  // bump minimum at the origin
    CHECK(r5.A_value > r0.A_value);
    // the Nehari constant explains A far better than the 1/2 constant
    CHECK(std::abs(r0.disc_nehari) < 0.1 * std::abs(r0.disc_half));
}

TEST_CASE("reduced gradient vanishes at constant potentials") {
    Lab lab(2, true);
    auto g = reduce::reduced_gradient(lab.pset, lab.prof, {0.0, 0.0}, 0.02, lab.cfg.beta,
                                      lab.cfg.session_options());
    for (double gi : g) CHECK(std::abs(gi) <= 1e-5);
}

TEST_CASE("optimize_reduced flags a degenerate landscape") {
    Lab lab(2, true);
    auto res = reduce::optimize_reduced(lab.pset, lab.prof, {0.1, 0.0}, 0.02, lab.cfg.beta,
                                        lab.cfg.qbox(), reduce::OptimizeMode::Min,
                                        lab.cfg.session_options());
    CHECK(res.converged);
    CHECK(res.degenerate_landscape);
    CHECK(res.steps == 0);
}

TEST_CASE("optimize_reduced moves toward the landscape minimum") {
    Lab lab(2);
    reduce::OptimizeOptions oopt;
    oopt.grad_tol = 5e-2;
    oopt.max_steps = 6;
    auto res = reduce::optimize_reduced(lab.pset, lab.prof, {0.3, 0.0}, 0.02, lab.cfg.beta,
                                        lab.cfg.qbox(), reduce::OptimizeMode::Min,
                                        lab.cfg.session_options(), oopt);
    const double d0 = std::hypot(0.3, 0.0);
    const double d1 = std::hypot(res.Qstar[0], res.Qstar[1]);
    CHECK(d1 < d0);
}

TEST_CASE("spectral dichotomy at a cheap configuration") {
    Lab lab(2);
    auto s = lab.session({0.0, 0.0}, 0.04);
    auto rep = s.spectral_probe(3, 3);
    CHECK(rep.ansatz_quotient < 0.0);
    CHECK(rep.min_complement_quotient > 0.0);
}
