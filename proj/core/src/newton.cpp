#include "cnls/newton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "cnls/reduction.hpp"

namespace cnls::driver {


SolutionRecord newton_solve(field::FieldPair init, const field::Coefficients& coeffs,
                            const NewtonOptions& opt) {
    // Damped matrix-free Newton on the strong-form residual. The Hessian of
    // a two-peak state carries a cluster of tiny mixed-sign eigenvalues (the
    // peaks translate almost freely), so the Newton direction is taken with a
    // best-step backtracking scan and falls back to the merit gradient
    // H g — a guaranteed descent direction for |grad|^2 — when the quadratic
    // model stops being useful.
    using field::FieldPair;
    SolutionRecord rec;
    rec.epsilon = coeffs.eps;

    field::HelmholtzSolver riesz(init.grid, 1.0);
    FieldPair cur = std::move(init);
    cur.zero_boundary();
    const bool trace = std::getenv("CNLS_NEWTON_TRACE") != nullptr;

    auto gradient = [&](const FieldPair& at) { return riesz.solve(field::grad_residual(at, coeffs)); };
    auto apply_H = [&](const FieldPair& at, const FieldPair& d) {
        return riesz.solve(field::hess_apply(at, d, coeffs));
    };

    FieldPair g = gradient(cur);
    double gnorm = field::norm(g);
    const double g0 = gnorm;

    auto best_along = [&](const FieldPair& dir, std::span<const double> ts, double& best_gn,
                          FieldPair& best_x, FieldPair& best_g) {
        bool found = false;
        for (double t : ts) {
            FieldPair trial = cur;
            trial.axpy(-t, dir);
            FieldPair gt = gradient(trial);
            const double gn = field::norm(gt);
            if (gn < best_gn) {
                best_gn = gn;
                best_x = std::move(trial);
                best_g = std::move(gt);
                found = true;
            }
        }
        return found;
    };

    int it = 0;
    for (; it < opt.max_iter && gnorm > opt.tol; ++it) {
        const double lin_tol = std::clamp(0.2 * gnorm / std::max(g0, 1e-30), 1e-8, 1e-3);
        double best_gn = gnorm;
        FieldPair best_x, best_g;

        FieldPair delta;
        reduce::minres_h1([&](const FieldPair& d) { return apply_H(cur, d); }, g, delta, lin_tol,
                          opt.max_linear_iter);
        static constexpr double newton_ts[] = {1.0,    0.5,    0.25,   0.125,  0.0625, 0.03125,
                                               0.0156, 0.0078, 0.0039, 0.002,  0.001};
        best_along(delta, newton_ts, best_gn, best_x, best_g);

        if (best_gn > 0.9 * gnorm) {
            // merit-gradient fallback with a Cauchy-type scale
            FieldPair hg = apply_H(cur, g);
            const double hgn2 = field::inner(hg, hg);
            if (hgn2 > 0.0) {
                const double tc = gnorm * gnorm / hgn2;
                const double cauchy_ts[] = {0.25 * tc, 0.5 * tc, tc, 2.0 * tc, 4.0 * tc};
                best_along(hg, cauchy_ts, best_gn, best_x, best_g);
            }
        }

        if (trace)
            std::fprintf(stderr, "  newton it=%d gnorm=%.3e -> %.3e\n", it, gnorm, best_gn);
        if (best_gn >= (1.0 - 1e-7) * gnorm) break;  // no meaningful progress left
        cur = std::move(best_x);
        g = std::move(best_g);
        gnorm = best_gn;
    }

    rec.newton_iters = it;
    rec.fields = std::move(cur);
    rec.final_grad_norm = gnorm;
    rec.converged = gnorm <= opt.tol;
    rec.min_field_value = rec.fields.min_interior();
    rec.energy = field::energy(rec.fields, coeffs).total;

    if (opt.collapse_energy_hint != 0.0 && opt.collapse_peak_hint > 0.0) {
        const double peak = rec.fields.max_abs();
        rec.collapsed = std::abs(rec.energy) < 0.5 * std::abs(opt.collapse_energy_hint) &&
                        peak < 0.1 * opt.collapse_peak_hint;
    }
    return rec;
}


namespace {

std::vector<double> component_peak(const std::vector<double>& a, const field::Grid& g, double eps) {
    double vmax = -std::numeric_limits<double>::infinity();
    double vmin = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t idx = 0; idx < g.total; ++idx) {
        if (a[idx] > vmax) {
            vmax = a[idx];
            arg = idx;
        }
        vmin = std::min(vmin, a[idx]);
    }
    if (!(vmax > 0.0) || vmax - vmin <= 1e-13 * std::max(1.0, std::abs(vmax)))
        throw PeakError("flat field: no strict interior maximum");

    // collect near-equal local maxima to detect ambiguity
    const auto m0 = g.multi(arg);
    std::vector<std::array<std::size_t, 3>> tops;
    for (std::size_t idx = 0; idx < g.total; ++idx) {
        if (a[idx] < vmax * (1.0 - 1e-9)) continue;
        bool local_max = true;
        for (int ax = 0; ax < g.dim && local_max; ++ax) {
            const std::size_t s = g.stride[static_cast<std::size_t>(ax)];
            const auto m = g.multi(idx);
            if (m[static_cast<std::size_t>(ax)] > 0 && a[idx - s] > a[idx]) local_max = false;
            if (m[static_cast<std::size_t>(ax)] + 1 < g.n[static_cast<std::size_t>(ax)] && a[idx + s] > a[idx])
                local_max = false;
        }
        if (local_max) tops.push_back(g.multi(idx));
    }
    for (const auto& t : tops) {
        std::size_t dist = 0;
        for (int ax = 0; ax < g.dim; ++ax) {
            const auto ia = static_cast<std::size_t>(ax);
            dist = std::max(dist, t[ia] > m0[ia] ? t[ia] - m0[ia] : m0[ia] - t[ia]);
        }
        if (dist > 2) {
            std::string msg = "ambiguous peak: equal maxima at nodes (";
            for (int ax = 0; ax < g.dim; ++ax)
                msg += std::to_string(m0[static_cast<std::size_t>(ax)]) + (ax + 1 < g.dim ? "," : ") and (");
            for (int ax = 0; ax < g.dim; ++ax)
                msg += std::to_string(t[static_cast<std::size_t>(ax)]) + (ax + 1 < g.dim ? "," : ")");
            throw PeakError(msg);
        }
    }

    for (int ax = 0; ax < g.dim; ++ax) {
        const auto ia = static_cast<std::size_t>(ax);
        if (m0[ia] <= 1 || m0[ia] + 2 >= g.n[ia])
            throw PeakError("maximum on the window boundary: window too small");
    }

    std::vector<double> peak(static_cast<std::size_t>(g.dim));
    for (int ax = 0; ax < g.dim; ++ax) {
        const auto ia = static_cast<std::size_t>(ax);
        const std::size_t s = g.stride[ia];
        const double fm = a[arg - s], f0 = a[arg], fp = a[arg + s];
        const double denom = fm - 2.0 * f0 + fp;
        double off = 0.0;
        if (denom < -1e-300) off = 0.5 * (fm - fp) / denom * g.h;
        off = std::clamp(off, -0.5 * g.h, 0.5 * g.h);
        peak[ia] = (g.lo[ia] + g.h * static_cast<double>(m0[ia]) + off) * eps;
    }
    return peak;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> extract_peaks(const field::FieldPair& fields,
                                                                  double eps) {
    return {component_peak(fields.u, *fields.grid, eps), component_peak(fields.v, *fields.grid, eps)};
}

}  // namespace cnls::driver
