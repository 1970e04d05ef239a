#include "cnls/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace cnls::reduce {

namespace {

using field::FieldPair;

FieldPair scaled_copy(const FieldPair& x, double a) {
    FieldPair y = x;
    y.scale(a);
    return y;
}

}  // namespace

MinresStats minres_h1(const std::function<FieldPair(const FieldPair&)>& A, const FieldPair& b,
                      FieldPair& x, double rel_tol, int max_iter) {
    // Paige-Saunders MINRES with the Euclidean dot replaced by the H1 pairing.
    MinresStats st;
    x = FieldPair(b.grid);

    FieldPair r1 = b;
    double beta1 = std::sqrt(field::inner(r1, r1));
    if (beta1 == 0.0) {
        st.converged = true;
        return st;
    }

    FieldPair r2 = r1;
    FieldPair y = r1;
    FieldPair w(b.grid), w2(b.grid);

    double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
    double cs = -1.0, sn = 0.0;
    double best = 1.0;
    int best_at = 0;

    for (int itn = 1; itn <= max_iter; ++itn) {
        const double s = 1.0 / beta;
        FieldPair v = scaled_copy(y, s);
        y = A(v);
        if (itn >= 2) y.axpy(-beta / oldb, r1);
        const double alfa = field::inner(v, y);
        y.axpy(-alfa / beta, r2);
        r1 = r2;
        r2 = y;
        y = r2;
        oldb = beta;
        beta = std::sqrt(field::inner(r2, r2));

        const double oldeps = epsln;
        const double delta = cs * dbar + sn * alfa;
        const double gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        double gamma = std::sqrt(gbar * gbar + beta * beta);
        gamma = std::max(gamma, 1e-300);
        cs = gbar / gamma;
        sn = beta / gamma;
        const double phi = cs * phibar;
        phibar = sn * phibar;

        FieldPair wnew = v;
        wnew.axpy(-oldeps, w2);
        wnew.axpy(-delta, w);
        wnew.scale(1.0 / gamma);
        w2 = w;
        w = wnew;
        x.axpy(phi, w);

        st.iterations = itn;
        st.rel_residual = phibar / beta1;
        if (st.rel_residual <= rel_tol) {
            st.converged = true;
            return st;
        }
        if (st.rel_residual < 0.999 * best) {
            best = st.rel_residual;
            best_at = itn;
        } else if (itn - best_at >= 50) {
            st.stagnated = true;  // residual plateau
            return st;
        }
    }
    return st;
}

double effective_margin(double margin, double eps, double h) {
    const double support = 2.0 * std::pow(eps, -0.25);
    return std::max(margin, support + 2.0 * h);
}

Session::Session(const potentials::PotentialSet& pset,
                 std::shared_ptr<const profile::GroundStateProfile> w_profile, std::vector<double> Q,
                 double eps, double beta, SessionOptions opt,
                 std::shared_ptr<const field::Grid> grid_override)
    : pset_(&pset), builder_(&pset, std::move(w_profile)), opt_(opt), eps_(eps), Q_(std::move(Q)) {
    placement_ = ansatz::place(Q_, eps_);
    grid_ = grid_override ? std::move(grid_override)
                          : field::make_grid(placement_, effective_margin(opt_.margin, eps_, opt_.grid_h),
                                             opt_.grid_h, opt_.node_cap);
    const double p = builder_.base_profile()->p;
    coeffs_ = field::sample_coefficients(pset, grid_, eps_, beta, p);
    ansatz_ = builder_.build(placement_, grid_);
    basis_ = builder_.tangent_basis(placement_, grid_, opt_.tangent_step);
    riesz_ = std::make_unique<field::HelmholtzSolver>(grid_, 1.0);

    // Projected-out span for the corrector: the paired tangent directions
    // plus the per-component translations around each peak (the two peaks
    // translate almost independently, so the complement of the paired span
    // alone keeps a near-null antisymmetric mode), plus the grid-level
    // derivatives of the ansatz (the FD directions miss the discrete
    // near-translations at O(h^2)).
    proj_basis_ = basis_.ortho;
    auto push_direction = [this](FieldPair d) {
        for (const auto& b : proj_basis_) d.axpy(-field::inner(d, b), b);
        const double n = field::norm(d);
        if (n > 1e-7) {
            d.scale(1.0 / n);
            proj_basis_.push_back(std::move(d));
        }
    };
    for (const auto& raw : basis_.raw) {
        FieldPair du(grid_), dv(grid_);
        du.u = raw.u;
        dv.v = raw.v;
        push_direction(std::move(du));
        push_direction(std::move(dv));
    }
    const field::Grid& g = *grid_;
    for (int a = 0; a < g.dim; ++a) {
        const std::size_t s = g.stride[static_cast<std::size_t>(a)];
        FieldPair du(grid_), dv(grid_);
        for (std::size_t idx = 0; idx < g.total; ++idx) {
            if (g.is_boundary(idx)) continue;
            du.u[idx] = (ansatz_.fields.u[idx + s] - ansatz_.fields.u[idx - s]) / (2.0 * g.h);
            dv.v[idx] = (ansatz_.fields.v[idx + s] - ansatz_.fields.v[idx - s]) / (2.0 * g.h);
        }
        push_direction(std::move(du));
        push_direction(std::move(dv));
    }

    const double m2p = profile::moment(*builder_.base_profile(), 2.0 * p);
    c_half_ = 0.5 * m2p;
    c_nehari_ = (p - 1.0) / (2.0 * p) * m2p;
}

FieldPair Session::project(FieldPair fp) const {
    for (const auto& b : proj_basis_) fp.axpy(-field::inner(fp, b), b);
    return fp;
}

FieldPair Session::riesz_gradient(const FieldPair& at) const {
    return riesz_->solve(field::grad_residual(at, coeffs_));
}

FieldPair Session::apply_hessian_riesz(const FieldPair& at, const FieldPair& d) const {
    return riesz_->solve(field::hess_apply(at, d, coeffs_));
}

FieldPair Session::apply_L(const FieldPair& d) const {
    return project(riesz_->solve(field::hess_apply(ansatz_.fields, project(d), coeffs_)));
}

Session::LinearResult Session::solve_projected_linear(const FieldPair& rhs, double rel_tol,
                                                      int max_iter) const {
    LinearResult out;
    out.stats = minres_h1([this](const FieldPair& d) { return apply_L(d); }, rhs, out.x, rel_tol,
                          max_iter);
    out.x = project(out.x);
    return out;
}

const std::vector<FieldPair>& Session::quasi_null_modes(double threshold) const {
    if (quasi_null_ready_) return quasi_null_;
    quasi_null_ready_ = true;

    std::mt19937_64 rng(opt_.seed + 101);
    for (int k = 0; k < 4; ++k) {
        FieldPair x = project(random_smooth_pair(grid_, rng));
        for (const auto& f : quasi_null_) x.axpy(-field::inner(x, f), f);
        double n = field::norm(x);
        if (n < 1e-12) break;
        x.scale(1.0 / n);

        auto op = [this](const FieldPair& d) {
            FieldPair out = apply_L(d);
            for (const auto& f : quasi_null_) out.axpy(-field::inner(out, f), f);
            return out;
        };
        double lam = 0.0;
        for (int it = 0; it < 10; ++it) {
            FieldPair y;
            minres_h1(op, x, y, 1e-5, opt_.max_linear_iter);
            for (const auto& f : quasi_null_) y.axpy(-field::inner(y, f), f);
            y = project(y);
            n = field::norm(y);
            if (n < 1e-14) break;
            y.scale(1.0 / n);
            x = std::move(y);
            lam = field::inner(apply_L(x), x);
        }
        if (std::abs(lam) >= threshold) break;  // spectrum bottom exhausted
        quasi_null_.push_back(std::move(x));
    }
    return quasi_null_;
}

CorrectorResult Session::corrector(const FieldPair* warm_start) const {
    // Newton iteration on the projected gradient. From w = 0 the first step
    // is exactly the frozen-linearization map of the construction; the
    // linearization point stays at the ansatz while that model contracts and
    // moves to the current iterate when it stops. Isolated small-|lambda|
    // modes of the linearization (leaked translation remnants; scaling modes
    // at near-critical exponents) are deflated from the Krylov solve and
    // stepped by sign-correct one-dimensional Newton instead.
    CorrectorResult res;
    res.w = warm_start ? project(*warm_start) : FieldPair(grid_);

    bool frozen = !opt_.relinearize;
    double prev_step = -1.0;
    int bad_ratios = 0;
    const bool trace = std::getenv("CNLS_CORRECTOR_TRACE") != nullptr;

    auto projected_gradient = [this](const FieldPair& w) {
        FieldPair at = ansatz_.fields;
        at.axpy(1.0, w);
        return project(riesz_gradient(at));
    };

    FieldPair pg = projected_gradient(res.w);
    double rn = field::norm(pg);
    const double res0 = rn;

    std::vector<FieldPair> modes;  // low-|lambda| eigenvectors at the iterate
    bool modes_computed = false;

    auto apply_J = [this](const FieldPair& base, const FieldPair& d) {
        return project(riesz_->solve(field::hess_apply(base, project(d), coeffs_)));
    };

    auto compute_low_modes = [&](const FieldPair& at_cur) {
        modes.clear();
        std::mt19937_64 rng(opt_.seed + 101);
        for (int k = 0; k < 4; ++k) {
            FieldPair x = project(random_smooth_pair(grid_, rng));
            for (const auto& f : modes) x.axpy(-field::inner(x, f), f);
            double n = field::norm(x);
            if (n < 1e-12) break;
            x.scale(1.0 / n);
            auto op = [&](const FieldPair& d) {
                FieldPair out = apply_J(at_cur, d);
                for (const auto& f : modes) out.axpy(-field::inner(out, f), f);
                return out;
            };
            double lam = 0.0;
            for (int itx = 0; itx < 6; ++itx) {
                FieldPair y;
                minres_h1(op, x, y, 1e-4, opt_.max_linear_iter);
                for (const auto& f : modes) y.axpy(-field::inner(y, f), f);
                y = project(y);
                n = field::norm(y);
                if (n < 1e-14) break;
                y.scale(1.0 / n);
                x = std::move(y);
                lam = field::inner(apply_J(at_cur, x), x);
            }
            if (std::abs(lam) >= 0.1) break;  // bottom of the spectrum exhausted
            modes.push_back(std::move(x));
        }
        modes_computed = true;
    };

    for (int it = 0; it <= opt_.max_corrector_iter; ++it) {
        res.residual_norm = rn;
        res.iterations = it;
        if (rn <= opt_.tol_corrector) {
            res.converged = true;
            break;
        }
        if (it == opt_.max_corrector_iter) break;

        const double lin_tol =
            std::clamp(0.2 * rn / std::max(res0, 1e-30), 1e-3 * opt_.tol_linear, opt_.tol_linear);
        FieldPair at_cur = ansatz_.fields;
        at_cur.axpy(1.0, res.w);

        bool accepted = false;
        double step_norm = 0.0, t_used = 0.0;
        for (int attempt = 0; attempt < 3 && !accepted; ++attempt) {
            const FieldPair& base = frozen ? ansatz_.fields : at_cur;
            auto deflate = [&](FieldPair x) {
                for (const auto& f : modes) x.axpy(-field::inner(x, f), f);
                return x;
            };
            auto op = [&](const FieldPair& d) { return deflate(apply_J(base, deflate(d))); };
            FieldPair delta;
            auto stats = minres_h1(op, deflate(pg), delta, lin_tol, opt_.max_linear_iter);
            if (!stats.converged && stats.stagnated && stats.rel_residual > 0.5)
                throw std::runtime_error("corrector: projected linear solve stagnated");
            delta = deflate(project(delta));

            // sign-correct Newton in each deflated mode, trust-capped
            const double dn_kry = field::norm(delta);
            for (const auto& f : modes) {
                const double lam = field::inner(apply_J(base, f), f);
                const double xi = field::inner(pg, f);
                if (std::abs(lam) < 1e-8) continue;
                double step = xi / lam;
                step = std::clamp(step, -0.25, 0.25);
                delta.axpy(step, f);
                if (trace && std::getenv("CNLS_CORRECTOR_TRACE")[0] == '2')
                    std::fprintf(stderr, "    mode lam=%+.3e xi=%+.3e step=%+.3e\n", lam, xi, step);
            }
            const double dn = field::norm(delta);
            if (trace && std::getenv("CNLS_CORRECTOR_TRACE")[0] == '2')
                std::fprintf(stderr, "    attempt=%d dn_kry=%.3e dn=%.3e minres_rel=%.2e\n", attempt,
                             dn_kry, dn, stats.rel_residual);

            for (double t : {1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125}) {
                FieldPair w_next = res.w;
                w_next.axpy(-t, delta);
                FieldPair pg_next = projected_gradient(w_next);
                const double rn_next = field::norm(pg_next);
                if (trace && std::getenv("CNLS_CORRECTOR_TRACE")[0] == '2')
                    std::fprintf(stderr, "      t=%.4g rn_next=%.4e (rn=%.4e)\n", t, rn_next, rn);
                if (rn_next <= (1.0 - 1e-4 * t) * rn) {
                    accepted = true;
                    step_norm = t * dn;
                    t_used = t;
                    res.w = project(w_next);
                    pg = std::move(pg_next);
                    rn = rn_next;
                    break;
                }
            }
            if (!accepted) {
                if (frozen) {
                    frozen = false;  // frozen model exhausted, move the linearization point
                    res.contraction_failure = true;
                } else if (!modes_computed) {
                    compute_low_modes(at_cur);  // isolate the blocking small modes
                    res.quasi_null_modes_used = static_cast<int>(modes.size());
                } else {
                    break;
                }
            }
        }
        if (trace)
            std::fprintf(stderr, "  corr it=%d rn=%.3e acc=%d t=%.3g step=%.3e modes=%zu frozen=%d\n",
                         it, rn, accepted ? 1 : 0, t_used, step_norm, modes.size(), frozen ? 1 : 0);
        if (!accepted) break;

        if (prev_step > 0.0) {
            const double ratio = step_norm / prev_step;
            res.contraction_ratios.push_back(ratio);
            bad_ratios = ratio >= 1.0 ? bad_ratios + 1 : 0;
            if (bad_ratios >= 3 && frozen) {
                res.contraction_failure = true;  // fixed-point map not contracting here
                frozen = false;
                bad_ratios = 0;
            }
        }
        prev_step = step_norm;
    }

    res.w_norm = field::norm(res.w);
    if (res.w_norm > 0.0) {
        for (const auto& b : basis_.ortho)
            res.max_tangent_overlap =
                std::max(res.max_tangent_overlap, std::abs(field::inner(res.w, b)) / res.w_norm);
    }
    return res;
}


ReducedSample Session::reduced_energy(const CorrectorResult& cr) const {
    if (!cr.converged) throw std::runtime_error("reduced_energy: corrector did not converge");
    FieldPair at = ansatz_.fields;
    at.axpy(1.0, cr.w);

    ReducedSample s;
    s.Q = Q_;
    s.epsilon = eps_;
    s.A_value = field::energy(at, coeffs_).total;
    s.gamma_value = potentials::gamma_bar(*pset_, Q_, coeffs_.p, grid_->dim);
    s.disc_half = s.A_value - c_half_ * s.gamma_value;
    s.disc_nehari = s.A_value - c_nehari_ * s.gamma_value;
    s.corrector_residual = cr.residual_norm;
    s.corrector_norm = cr.w_norm;
    s.corrector_iterations = cr.iterations;
    return s;
}

ReducedSample Session::reduced_energy() const { return reduced_energy(corrector()); }

SpectralReport Session::spectral_probe(int samples, int inverse_steps) const {
    SpectralReport rep;

    // (a) Rayleigh quotient along the normalized ansatz direction
    const FieldPair& z = ansatz_.fields;
    const double zn2 = field::inner(z, z);
    rep.ansatz_quotient = field::inner_l2(field::hess_apply(z, z, coeffs_), z) / zn2;

    // (b) probe the complement of tangent + ansatz span
    std::vector<FieldPair> enlarged = proj_basis_;
    {
        FieldPair za = z;
        for (const auto& b : enlarged) za.axpy(-field::inner(za, b), b);
        const double n = field::norm(za);
        if (n > 1e-12) {
            za.scale(1.0 / n);
            enlarged.push_back(std::move(za));
        }
    }
    auto project_enlarged = [&](FieldPair fp) {
        for (const auto& b : enlarged) fp.axpy(-field::inner(fp, b), b);
        return fp;
    };
    auto op = [&, this](const FieldPair& d) {
        return project_enlarged(riesz_->solve(field::hess_apply(z, project_enlarged(d), coeffs_)));
    };

    std::mt19937_64 rng(opt_.seed);
    rep.min_complement_quotient = std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
        FieldPair d = project_enlarged(random_smooth_pair(grid_, rng));
        double n = field::norm(d);
        if (n < 1e-12) continue;
        d.scale(1.0 / n);
        for (int k = 0; k < inverse_steps; ++k) {
            FieldPair sol;
            minres_h1(op, d, sol, 1e-5, opt_.max_linear_iter);
            sol = project_enlarged(sol);
            n = field::norm(sol);
            if (n < 1e-14) break;
            sol.scale(1.0 / n);
            d = std::move(sol);
        }
        const double q = field::inner(op(d), d) / field::inner(d, d);
        rep.sample_quotients.push_back(q);
        rep.min_complement_quotient = std::min(rep.min_complement_quotient, q);
    }
    return rep;
}

double Session::smallest_eigen_magnitude(int inverse_steps) const {
    std::mt19937_64 rng(opt_.seed + 7);
    FieldPair d = project(random_smooth_pair(grid_, rng));
    double n = field::norm(d);
    if (n < 1e-12) return 0.0;
    d.scale(1.0 / n);
    for (int k = 0; k < inverse_steps; ++k) {
        FieldPair sol;
        minres_h1([this](const FieldPair& x) { return apply_L(x); }, d, sol, 1e-6,
                  opt_.max_linear_iter);
        sol = project(sol);
        n = field::norm(sol);
        if (n < 1e-14) break;
        sol.scale(1.0 / n);
        d = std::move(sol);
    }
    return std::abs(field::inner(apply_L(d), d)) / field::inner(d, d);
}

std::vector<double> reduced_gradient(const potentials::PotentialSet& pset,
                                     std::shared_ptr<const profile::GroundStateProfile> w_profile,
                                     const std::vector<double>& Q, double eps, double beta,
                                     const SessionOptions& opt, double fd_step) {
    const int dim = static_cast<int>(Q.size());
    const double delta = fd_step > 0.0 ? fd_step : std::sqrt(eps) / 8.0;

    // one grid covering the whole stencil, so the stencil solves share it
    SessionOptions center_opt = opt;
    center_opt.margin = effective_margin(opt.margin, eps, opt.grid_h) + delta / eps + opt.grid_h;
    Session center(pset, w_profile, Q, eps, beta, center_opt);
    auto warm = center.corrector();
    if (!warm.converged) throw std::runtime_error("reduced_gradient: center corrector failed");

    std::vector<double> g(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
        double plus, minus;
        for (double sign : {+1.0, -1.0}) {
            std::vector<double> Qs = Q;
            Qs[static_cast<std::size_t>(a)] += sign * delta;
            Session s(pset, w_profile, Qs, eps, beta, opt, center.grid_ptr());
            auto cr = s.corrector(&warm.w);
            if (!cr.converged)
                throw std::runtime_error("reduced_gradient: stencil corrector failed");
            (sign > 0 ? plus : minus) = s.reduced_energy(cr).A_value;
        }
        g[static_cast<std::size_t>(a)] = (plus - minus) / (2.0 * delta);
    }
    return g;
}

OptimizeResult optimize_reduced(const potentials::PotentialSet& pset,
                                std::shared_ptr<const profile::GroundStateProfile> w_profile,
                                std::vector<double> Q0, double eps, double beta,
                                const potentials::Box& qbox, OptimizeMode mode,
                                const SessionOptions& opt, const OptimizeOptions& oopt) {
    const int dim = static_cast<int>(Q0.size());
    const double fd = oopt.fd_step > 0.0 ? oopt.fd_step : std::sqrt(eps) / 8.0;
    const double diam = qbox.diameter();

    auto clamp = [&](std::vector<double>& Q) {
        for (int a = 0; a < dim; ++a) {
            const auto ia = static_cast<std::size_t>(a);
            double lo = qbox.lo[ia], hi = qbox.hi[ia];
            if (a == 0) hi -= std::sqrt(eps);  // keep Q' = Q + sqrt(eps) e1 inside
            Q[ia] = std::clamp(Q[ia], lo, hi);
        }
    };

    OptimizeResult out;
    clamp(Q0);
    out.Qstar = Q0;

    auto eval_A = [&](const std::vector<double>& Q) {
        Session s(pset, w_profile, Q, eps, beta, opt);
        return s.reduced_energy().A_value;
    };

    const double sgn = mode == OptimizeMode::Min ? 1.0 : -1.0;
    double fcur = sgn * eval_A(out.Qstar);

    for (int step = 0; step < oopt.max_steps; ++step) {
        auto g = reduced_gradient(pset, w_profile, out.Qstar, eps, beta, opt, fd);
        ++out.gradient_evaluations;
        double gn = 0.0;
        for (double gi : g) gn += gi * gi;
        gn = std::sqrt(gn);
        if (gn <= oopt.grad_tol) {
            out.converged = true;
            if (step == 0) out.degenerate_landscape = true;
            break;
        }

        double t = std::min(1.0, 0.1 * diam / gn);
        bool accepted = false;
        for (int bt = 0; bt < 8; ++bt) {
            std::vector<double> Qn = out.Qstar;
            for (int a = 0; a < dim; ++a)
                Qn[static_cast<std::size_t>(a)] -= sgn * t * g[static_cast<std::size_t>(a)];
            clamp(Qn);
            const double fn = sgn * eval_A(Qn);
            if (fn <= fcur - 1e-4 * t * gn * gn) {
                out.Qstar = std::move(Qn);
                fcur = fn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        ++out.steps;
        if (!accepted || t * gn < oopt.min_step) break;
    }

    Session final_session(pset, w_profile, out.Qstar, eps, beta, opt);
    out.sample = final_session.reduced_energy();
    return out;
}

field::FieldPair random_smooth_pair(std::shared_ptr<const field::Grid> grid, std::mt19937_64& rng) {
    const field::Grid& g = *grid;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);

    field::FieldPair fp(grid);
    const int bumps = 4;
    double x[3];
    for (int which = 0; which < 2; ++which) {
        auto& comp = which == 0 ? fp.u : fp.v;
        for (int b = 0; b < bumps; ++b) {
            double c[3] = {0, 0, 0};
            for (int a = 0; a < g.dim; ++a) {
                const auto ia = static_cast<std::size_t>(a);
                const double w = g.hi[ia] - g.lo[ia];
                c[a] = g.lo[ia] + (0.2 + 0.6 * unit(rng)) * w;
            }
            const double width = 1.0 + 2.0 * unit(rng);
            const double a0 = amp(rng);
            for (std::size_t idx = 0; idx < g.total; ++idx) {
                g.coords(idx, x);
                double r2 = 0.0;
                for (int a = 0; a < g.dim; ++a) r2 += (x[a] - c[a]) * (x[a] - c[a]);
                comp[idx] += a0 * std::exp(-r2 / (width * width));
            }
        }
    }
    fp.zero_boundary();
    return fp;
}

}  // namespace cnls::reduce
