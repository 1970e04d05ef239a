#include "cnls/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "cnls/numeric.hpp"

namespace cnls::potentials {

bool Box::contains(std::span<const double> q) const {
    for (std::size_t a = 0; a < lo.size(); ++a)
        if (q[a] < lo[a] || q[a] > hi[a]) return false;
    return true;
}

double Box::diameter() const {
    double s = 0.0;
    for (std::size_t a = 0; a < lo.size(); ++a) s += (hi[a] - lo[a]) * (hi[a] - lo[a]);
    return std::sqrt(s);
}

PotentialSet::PotentialSet(expr::Expression j1, expr::Expression j2, expr::Expression k1,
                           expr::Expression k2, int dim, std::array<Bounds, 4> bounds)
    : exprs_{std::move(j1), std::move(j2), std::move(k1), std::move(k2)}, bounds_(bounds), dim_(dim) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("potential dimension must be 1, 2 or 3");
    for (auto& b : bounds_)
        if (b.lower <= 0.0) throw std::invalid_argument("declared lower bound C must be positive");
    for (int w = 0; w < 4; ++w) {
        auto& g = grads_[static_cast<std::size_t>(w)];
        g.reserve(static_cast<std::size_t>(dim));
        for (int a = 0; a < dim; ++a) g.push_back(exprs_[static_cast<std::size_t>(w)].derivative(a));
    }
}

PotentialSet PotentialSet::from_strings(const std::string& j1, const std::string& j2,
                                        const std::string& k1, const std::string& k2, int dim,
                                        std::array<Bounds, 4> bounds) {
    return PotentialSet(expr::Expression::parse(j1, dim), expr::Expression::parse(j2, dim),
                        expr::Expression::parse(k1, dim), expr::Expression::parse(k2, dim), dim, bounds);
}

std::array<double, 4> PotentialSet::values(std::span<const double> q) const {
    return {exprs_[0].eval(q), exprs_[1].eval(q), exprs_[2].eval(q), exprs_[3].eval(q)};
}

std::vector<double> PotentialSet::gradient(int which, std::span<const double> q) const {
    const auto& g = grads_[static_cast<std::size_t>(which)];
    std::vector<double> out(static_cast<std::size_t>(dim_));
    for (int a = 0; a < dim_; ++a) out[static_cast<std::size_t>(a)] = g[static_cast<std::size_t>(a)].eval(q);
    return out;
}

const char* PotentialSet::name(int which) {
    static const char* names[] = {"J1", "J2", "K1", "K2"};
    return names[which];
}

// ---- validation ---------------------------------------------------------

ValidationReport validate_hypotheses(const PotentialSet& pset, const Box& box, int samples_per_axis) {
    if (samples_per_axis < 2) throw std::invalid_argument("validate_hypotheses: samples must be >= 2");
    const int dim = pset.dim();
    if (box.dim() != dim) throw std::invalid_argument("validate_hypotheses: box dimension mismatch");

    ValidationReport rep;
    rep.min_value.fill(std::numeric_limits<double>::infinity());
    rep.max_value.fill(-std::numeric_limits<double>::infinity());
    rep.max_gradient_norm.fill(0.0);
    rep.pass = true;

    std::vector<double> q(static_cast<std::size_t>(dim));
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(samples_per_axis);

    constexpr std::size_t kMaxViolations = 16;
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int a = 0; a < dim; ++a) {
            const auto i = rem % static_cast<std::size_t>(samples_per_axis);
            rem /= static_cast<std::size_t>(samples_per_axis);
            const double t = static_cast<double>(i) / (samples_per_axis - 1);
            q[static_cast<std::size_t>(a)] = box.lo[static_cast<std::size_t>(a)] +
                                             t * (box.hi[static_cast<std::size_t>(a)] -
                                                  box.lo[static_cast<std::size_t>(a)]);
        }
        for (int w = 0; w < 4; ++w) {
            const double v = pset.expression(w).eval(q);
            auto& b = pset.declared_bounds(w);
            rep.min_value[static_cast<std::size_t>(w)] = std::min(rep.min_value[static_cast<std::size_t>(w)], v);
            rep.max_value[static_cast<std::size_t>(w)] = std::max(rep.max_value[static_cast<std::size_t>(w)], v);
            auto g = pset.gradient(w, q);
            double gn = 0.0;
            for (double gi : g) gn += gi * gi;
            gn = std::sqrt(gn);
            rep.max_gradient_norm[static_cast<std::size_t>(w)] =
                std::max(rep.max_gradient_norm[static_cast<std::size_t>(w)], gn);

            const bool low = v < b.lower;
            const bool high = std::abs(v) > b.upper;
            const bool steep = gn > b.upper;
            if (low || high || steep) {
                rep.pass = false;
                if (rep.violations.size() < kMaxViolations) {
                    Violation viol;
                    viol.which = w;
                    viol.point = q;
                    viol.value = low || high ? v : gn;
                    viol.reason = low ? "value below declared lower bound"
                                      : (high ? "value above declared upper bound"
                                              : "gradient norm above declared upper bound");
                    rep.violations.push_back(std::move(viol));
                }
            }
        }
    }
    return rep;
}

// ---- landscapes -----------------------------------------------------------

namespace {

void require_positive(const std::array<double, 4>& v) {
    for (int w = 0; w < 4; ++w)
        if (v[static_cast<std::size_t>(w)] <= 0.0)
            throw std::domain_error(std::string("potential ") + PotentialSet::name(w) +
                                    " is nonpositive at the evaluation point");
}

void require_admissible(double p, int N) {
    if (N >= 3) {
        if (!(p > 1.0) || !(2.0 * p < 2.0 * N / (N - 2.0)))
            throw std::invalid_argument("exponent p outside the admissible range for N >= 3");
    } else if (N == 1 || N == 2) {
        if (!(p > 1.0)) throw std::invalid_argument("exponent p must exceed 1");
    } else {
        throw std::invalid_argument("dimension N must be 1, 2 or 3");
    }
}

}  // namespace

double gamma(const PotentialSet& pset, std::span<const double> q) {
    const auto v = pset.values(q);
    require_positive(v);
    return std::sqrt(v[0]) / v[1] + std::sqrt(v[2]) / v[3];
}

double gamma_bar(const PotentialSet& pset, std::span<const double> q, double p, int N) {
    require_admissible(p, N);
    const auto v = pset.values(q);
    require_positive(v);
    const double e1 = p / (p - 1.0) - 0.5 * N;
    const double e2 = -1.0 / (p - 1.0);
    return std::pow(v[0], e1) * std::pow(v[1], e2) + std::pow(v[2], e1) * std::pow(v[3], e2);
}

double landscape_value(const PotentialSet& pset, std::span<const double> q, const GammaSpec& spec) {
    return spec.classic ? gamma(pset, q) : gamma_bar(pset, q, spec.p, spec.N);
}

const char* to_string(CritKind k) {
    switch (k) {
        case CritKind::Min: return "min";
        case CritKind::Max: return "max";
        case CritKind::Saddle: return "saddle";
        case CritKind::Degenerate: return "degenerate";
    }
    return "?";
}

// ---- critical point search ------------------------------------------------

namespace {

struct Lattice {
    std::vector<std::vector<double>> points;
};

Lattice seed_lattice(const Box& box, int per_axis, double shrink_rel) {
    const int dim = box.dim();
    Lattice lat;
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(per_axis);
    lat.points.reserve(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::vector<double> q(static_cast<std::size_t>(dim));
        std::size_t rem = flat;
        for (int a = 0; a < dim; ++a) {
            const auto i = rem % static_cast<std::size_t>(per_axis);
            rem /= static_cast<std::size_t>(per_axis);
            const double w = box.hi[static_cast<std::size_t>(a)] - box.lo[static_cast<std::size_t>(a)];
            const double lo = box.lo[static_cast<std::size_t>(a)] + shrink_rel * w;
            const double hi = box.hi[static_cast<std::size_t>(a)] - shrink_rel * w;
            const double t = per_axis == 1 ? 0.5 : static_cast<double>(i) / (per_axis - 1);
            q[static_cast<std::size_t>(a)] = lo + t * (hi - lo);
        }
        lat.points.push_back(std::move(q));
    }
    return lat;
}

// 3-point central differences; the landscape is smooth wherever defined.
std::vector<double> fd_gradient(const PotentialSet& pset, const GammaSpec& spec,
                                std::vector<double> q, double h) {
    const int dim = pset.dim();
    std::vector<double> g(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a) {
        const double save = q[static_cast<std::size_t>(a)];
        q[static_cast<std::size_t>(a)] = save + h;
        const double fp = landscape_value(pset, q, spec);
        q[static_cast<std::size_t>(a)] = save - h;
        const double fm = landscape_value(pset, q, spec);
        q[static_cast<std::size_t>(a)] = save;
        g[static_cast<std::size_t>(a)] = (fp - fm) / (2.0 * h);
    }
    return g;
}

std::vector<double> fd_hessian(const PotentialSet& pset, const GammaSpec& spec,
                               std::vector<double> q, double h) {
    const int dim = pset.dim();
    const double f0 = landscape_value(pset, q, spec);
    std::vector<double> H(static_cast<std::size_t>(dim * dim));
    for (int a = 0; a < dim; ++a) {
        const double sa = q[static_cast<std::size_t>(a)];
        q[static_cast<std::size_t>(a)] = sa + h;
        const double fp = landscape_value(pset, q, spec);
        q[static_cast<std::size_t>(a)] = sa - h;
        const double fm = landscape_value(pset, q, spec);
        q[static_cast<std::size_t>(a)] = sa;
        H[static_cast<std::size_t>(a * dim + a)] = (fp - 2.0 * f0 + fm) / (h * h);
        for (int b = a + 1; b < dim; ++b) {
            const double sb = q[static_cast<std::size_t>(b)];
            q[static_cast<std::size_t>(a)] = sa + h; q[static_cast<std::size_t>(b)] = sb + h;
            const double fpp = landscape_value(pset, q, spec);
            q[static_cast<std::size_t>(b)] = sb - h;
            const double fpm = landscape_value(pset, q, spec);
            q[static_cast<std::size_t>(a)] = sa - h;
            const double fmm = landscape_value(pset, q, spec);
            q[static_cast<std::size_t>(b)] = sb + h;
            const double fmp = landscape_value(pset, q, spec);
            q[static_cast<std::size_t>(a)] = sa; q[static_cast<std::size_t>(b)] = sb;
            const double v = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            H[static_cast<std::size_t>(a * dim + b)] = v;
            H[static_cast<std::size_t>(b * dim + a)] = v;
        }
    }
    return H;
}

// Gaussian elimination with partial pivoting; dim <= 3.
bool solve_small(std::vector<double> A, std::vector<double> b, int n, std::vector<double>& x) {
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(A[static_cast<std::size_t>(r * n + c)]) >
                std::abs(A[static_cast<std::size_t>(piv * n + c)]))
                piv = r;
        if (std::abs(A[static_cast<std::size_t>(piv * n + c)]) < 1e-14) return false;
        if (piv != c) {
            for (int k = 0; k < n; ++k)
                std::swap(A[static_cast<std::size_t>(c * n + k)], A[static_cast<std::size_t>(piv * n + k)]);
            std::swap(b[static_cast<std::size_t>(c)], b[static_cast<std::size_t>(piv)]);
        }
        for (int r = c + 1; r < n; ++r) {
            const double f = A[static_cast<std::size_t>(r * n + c)] / A[static_cast<std::size_t>(c * n + c)];
            for (int k = c; k < n; ++k)
                A[static_cast<std::size_t>(r * n + k)] -= f * A[static_cast<std::size_t>(c * n + k)];
            b[static_cast<std::size_t>(r)] -= f * b[static_cast<std::size_t>(c)];
        }
    }
    x.assign(static_cast<std::size_t>(n), 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[static_cast<std::size_t>(r)];
        for (int k = r + 1; k < n; ++k) s -= A[static_cast<std::size_t>(r * n + k)] * x[static_cast<std::size_t>(k)];
        x[static_cast<std::size_t>(r)] = s / A[static_cast<std::size_t>(r * n + r)];
    }
    return true;
}

double norm2(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

LandscapeReport find_critical_points(const PotentialSet& pset, const Box& box, const GammaSpec& spec,
                                     const CriticalSearchOptions& opt) {
    const int dim = pset.dim();
    if (box.dim() != dim) throw std::invalid_argument("find_critical_points: box dimension mismatch");

    LandscapeReport rep;
    rep.gamma_kind = spec;

    const double diam = box.diameter();
    const double fd_h = 1e-5 * std::max(1.0, diam);
    const double hess_h = 1e-4 * std::max(1.0, diam);

    Lattice lat = seed_lattice(box, opt.seeds_per_axis, opt.shrink_rel);

    // flat-landscape guard: constant potentials have no isolated critical points
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const auto& q : lat.points) {
        const double v = landscape_value(pset, q, spec);
        vmin = std::min(vmin, v);
        vmax = std::max(vmax, v);
    }
    if (vmax - vmin <= 1e-12 * (1.0 + std::abs(vmax))) {
        rep.degenerate_landscape = true;
        return rep;
    }

    auto clamp_to_box = [&](std::vector<double>& q) {
        for (int a = 0; a < dim; ++a) {
            const double w = box.hi[static_cast<std::size_t>(a)] - box.lo[static_cast<std::size_t>(a)];
            q[static_cast<std::size_t>(a)] =
                std::clamp(q[static_cast<std::size_t>(a)], box.lo[static_cast<std::size_t>(a)] + opt.shrink_rel * w,
                           box.hi[static_cast<std::size_t>(a)] - opt.shrink_rel * w);
        }
    };

    std::vector<CriticalPoint> found;
    for (const auto& seed : lat.points) {
        std::vector<double> q = seed;
        bool converged = false;
        for (int it = 0; it < opt.max_iterations; ++it) {
            auto g = fd_gradient(pset, spec, q, fd_h);
            const double gn = norm2(g);
            if (gn <= opt.grad_tol) {
                converged = true;
                break;
            }
            auto H = fd_hessian(pset, spec, q, hess_h);
            std::vector<double> step;
            bool ok = solve_small(H, g, dim, step);
            double sn = ok ? norm2(step) : 0.0;
            if (!ok || sn > 0.25 * diam) {
                // fall back to a short gradient step toward smaller |grad|
                step.assign(g.begin(), g.end());
                const double sc = 0.01 * diam / std::max(gn, 1e-30);
                for (auto& s : step) s *= sc;
                sn = norm2(step);
            }
            for (int a = 0; a < dim; ++a) q[static_cast<std::size_t>(a)] -= step[static_cast<std::size_t>(a)];
            clamp_to_box(q);
            if (sn < 1e-14 * std::max(1.0, diam)) break;
        }
        if (!converged) continue;

        auto g = fd_gradient(pset, spec, q, fd_h);
        CriticalPoint cp;
        cp.q = q;
        cp.value = landscape_value(pset, q, spec);
        cp.grad_norm = norm2(g);

        auto H = fd_hessian(pset, spec, q, hess_h);
        auto eig = num::sym_eigenvalues(H, dim);
        int pos = 0, neg = 0, null = 0;
        for (double l : eig) {
            if (l > opt.hess_eig_tol) ++pos;
            else if (l < -opt.hess_eig_tol) ++neg;
            else ++null;
        }
        if (null > 0) cp.kind = CritKind::Degenerate;
        else if (pos == dim) cp.kind = CritKind::Min;
        else if (neg == dim) cp.kind = CritKind::Max;
        else cp.kind = CritKind::Saddle;

        found.push_back(std::move(cp));
    }

    // deterministic order before dedup
    std::sort(found.begin(), found.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
        return std::lexicographical_compare(a.q.begin(), a.q.end(), b.q.begin(), b.q.end());
    });

    const double merge_r = opt.dedup_rel * diam;
    std::vector<CriticalPoint> merged;
    for (auto& cp : found) {
        bool absorbed = false;
        for (auto& m : merged) {
            double d = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double t = cp.q[static_cast<std::size_t>(a)] - m.q[static_cast<std::size_t>(a)];
                d += t * t;
            }
            if (std::sqrt(d) <= merge_r) {
                if (cp.grad_norm < m.grad_norm) m = cp;
                absorbed = true;
                break;
            }
        }
        if (!absorbed) merged.push_back(std::move(cp));
    }

    for (std::size_t i = 0; i < merged.size(); ++i) {
        double best = diam;  // lone critical point: report the box diameter
        for (std::size_t j = 0; j < merged.size(); ++j) {
            if (i == j) continue;
            double d = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double t = merged[i].q[static_cast<std::size_t>(a)] - merged[j].q[static_cast<std::size_t>(a)];
                d += t * t;
            }
            best = std::min(best, std::sqrt(d));
        }
        merged[i].isolation_radius = best;
    }

    rep.critical_points = std::move(merged);
    return rep;
}

std::string LandscapeReport::to_json() const {
    nlohmann::ordered_json j;
    j["gamma_kind"] = gamma_kind.classic
                          ? nlohmann::ordered_json("classic")
                          : nlohmann::ordered_json{{"p", gamma_kind.p}, {"N", gamma_kind.N}};
    j["degenerate_landscape"] = degenerate_landscape;
    j["critical_points"] = nlohmann::ordered_json::array();
    for (const auto& cp : critical_points) {
        nlohmann::ordered_json e;
        e["Q"] = cp.q;
        e["value"] = cp.value;
        e["kind"] = to_string(cp.kind);
        e["isolation_radius"] = cp.isolation_radius;
        e["grad_norm"] = cp.grad_norm;
        j["critical_points"].push_back(std::move(e));
    }
    return j.dump(2);
}

}  // namespace cnls::potentials
