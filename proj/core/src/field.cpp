#include "cnls/field.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cnls/numeric.hpp"

namespace cnls::field {

namespace {

void check_same_grid(const FieldPair& a, const FieldPair& b) {
    if (a.grid.get() != b.grid.get() &&
        (a.grid->dim != b.grid->dim || a.grid->n != b.grid->n || a.grid->h != b.grid->h))
        throw std::invalid_argument("field pairs live on different grids");
}

// odd-power helpers valid for negative iterates
inline double opow(double x, double e) {  // |x|^{e-1} x
    return x >= 0.0 ? std::pow(x, e) : -std::pow(-x, e);
}
inline double apow(double x, double e) {  // |x|^e
    return std::pow(std::abs(x), e);
}

/// Sum f(idx) over all nodes: sequential within axis-0 lines, pairwise across
/// lines. Fixed topology, reproducible.
template <class F>
double sum_nodes(const Grid& g, F&& f) {
    const std::size_t n0 = g.n[0];
    const std::size_t lines = g.total / n0;
    std::vector<double> partial(lines);
    for (std::size_t l = 0; l < lines; ++l) {
        const std::size_t base = l * n0;
        double s = 0.0;
        for (std::size_t i = 0; i < n0; ++i) s += f(base + i);
        partial[l] = s;
    }
    return num::pairwise_sum(partial);
}

/// Sum f(idx, idx + stride[axis]) over all edges along `axis`.
template <class F>
double sum_edges(const Grid& g, int axis, F&& f) {
    const std::size_t s = g.stride[static_cast<std::size_t>(axis)];
    const std::size_t na = g.n[static_cast<std::size_t>(axis)];
    const std::size_t n0 = g.n[0];
    const std::size_t lines = g.total / n0;
    std::vector<double> partial(lines);
    if (axis == 0) {
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t base = l * n0;
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < n0; ++i) acc += f(base + i, base + i + 1);
            partial[l] = acc;
        }
    } else {
        for (std::size_t l = 0; l < lines; ++l) {
            const std::size_t base = l * n0;
            const auto m = g.multi(base);
            if (m[static_cast<std::size_t>(axis)] + 1 >= na) {
                partial[l] = 0.0;
                continue;
            }
            double acc = 0.0;
            for (std::size_t i = 0; i < n0; ++i) acc += f(base + i, base + i + s);
            partial[l] = acc;
        }
    }
    return num::pairwise_sum(partial);
}

}  // namespace

Coefficients sample_coefficients(const potentials::PotentialSet& pset,
                                 std::shared_ptr<const Grid> grid, double eps, double beta, double p) {
    if (beta > 0.0) throw std::invalid_argument("beta must be nonpositive (repulsive coupling)");
    if (!(p > 1.0)) throw std::invalid_argument("exponent p must exceed 1");
    if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
    if (pset.dim() != grid->dim) throw std::invalid_argument("potential/grid dimension mismatch");

    Coefficients c;
    c.grid = grid;
    c.eps = eps;
    c.beta = beta;
    c.p = p;
    c.j1.resize(grid->total);
    c.j2.resize(grid->total);
    c.k1.resize(grid->total);
    c.k2.resize(grid->total);
    double x[3];
    std::vector<double> q(static_cast<std::size_t>(grid->dim));
    for (std::size_t idx = 0; idx < grid->total; ++idx) {
        grid->coords(idx, x);
        for (int a = 0; a < grid->dim; ++a) q[static_cast<std::size_t>(a)] = eps * x[a];
        const auto vals = pset.values(q);
        c.j1[idx] = vals[0];
        c.j2[idx] = vals[1];
        c.k1[idx] = vals[2];
        c.k2[idx] = vals[3];
    }
    return c;
}

EnergyBreakdown energy(const FieldPair& fp, const Coefficients& c) {
    const Grid& g = *fp.grid;
    const double vol = g.cell_volume();
    const double h2 = g.h * g.h;
    const double p = c.p;
    const bool cubic = p == 2.0;

    double ugrad = 0.0, vgrad = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        ugrad += sum_edges(g, a, [&](std::size_t i, std::size_t j) {
            const double d = fp.u[j] - fp.u[i];
            return d * d;
        });
        vgrad += sum_edges(g, a, [&](std::size_t i, std::size_t j) {
            const double d = fp.v[j] - fp.v[i];
            return d * d;
        });
    }

    const double unode = sum_nodes(g, [&](std::size_t i) {
        const double u = fp.u[i];
        const double u2p = cubic ? u * u * u * u : apow(u, 2.0 * p);
        return 0.5 * c.j1[i] * u * u - 0.5 / p * c.j2[i] * u2p;
    });
    const double vnode = sum_nodes(g, [&](std::size_t i) {
        const double v = fp.v[i];
        const double v2p = cubic ? v * v * v * v : apow(v, 2.0 * p);
        return 0.5 * c.k1[i] * v * v - 0.5 / p * c.k2[i] * v2p;
    });
    const double cpl = sum_nodes(g, [&](std::size_t i) {
        const double u = fp.u[i], v = fp.v[i];
        return cubic ? u * u * v * v : apow(u, p) * apow(v, p);
    });

    EnergyBreakdown e;
    e.jpart = vol * (0.5 * ugrad / h2 + unode);
    e.kpart = vol * (0.5 * vgrad / h2 + vnode);
    e.coupling = vol * (-c.beta / p * cpl);
    e.total = e.jpart + e.kpart + e.coupling;
    return e;
}

FieldPair grad_residual(const FieldPair& fp, const Coefficients& c) {
    const Grid& g = *fp.grid;
    FieldPair out(fp.grid);
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double p = c.p;
    const bool cubic = p == 2.0;

    const std::size_t s0 = g.stride[0], s1 = g.stride[1], s2 = g.stride[2];
    const std::size_t n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    for (std::size_t k = 0; k < n2; ++k) {
        const bool in2 = g.dim < 3 || (k > 0 && k + 1 < n2);
        for (std::size_t j = 0; j < n1; ++j) {
            const bool in1 = g.dim < 2 || (j > 0 && j + 1 < n1);
            const std::size_t row = j * s1 + k * s2;
            for (std::size_t i = 0; i < n0; ++i) {
                const std::size_t idx = row + i;
                if (!(in2 && in1 && i > 0 && i + 1 < n0)) continue;

                const double u = fp.u[idx], v = fp.v[idx];
                double lap_u = -2.0 * g.dim * u;
                double lap_v = -2.0 * g.dim * v;
                lap_u += fp.u[idx - s0] + fp.u[idx + s0];
                lap_v += fp.v[idx - s0] + fp.v[idx + s0];
                if (g.dim >= 2) {
                    lap_u += fp.u[idx - s1] + fp.u[idx + s1];
                    lap_v += fp.v[idx - s1] + fp.v[idx + s1];
                }
                if (g.dim >= 3) {
                    lap_u += fp.u[idx - s2] + fp.u[idx + s2];
                    lap_v += fp.v[idx - s2] + fp.v[idx + s2];
                }

                double fu, fv, cu, cv;
                if (cubic) {
                    fu = c.j2[idx] * u * u * u;
                    fv = c.k2[idx] * v * v * v;
                    cu = c.beta * u * v * v;
                    cv = c.beta * u * u * v;
                } else {
                    fu = c.j2[idx] * opow(u, 2.0 * p - 1.0);
                    fv = c.k2[idx] * opow(v, 2.0 * p - 1.0);
                    cu = c.beta * opow(u, p - 1.0) * apow(v, p);
                    cv = c.beta * apow(u, p) * opow(v, p - 1.0);
                }
                out.u[idx] = -lap_u * inv_h2 + c.j1[idx] * u - fu - cu;
                out.v[idx] = -lap_v * inv_h2 + c.k1[idx] * v - fv - cv;
            }
        }
    }
    return out;
}

FieldPair hess_apply(const FieldPair& at, const FieldPair& dir, const Coefficients& c) {
    check_same_grid(at, dir);
    const Grid& g = *at.grid;
    FieldPair out(at.grid);
    const double inv_h2 = 1.0 / (g.h * g.h);
    const double p = c.p;
    const bool cubic = p == 2.0;

    const std::size_t s0 = g.stride[0], s1 = g.stride[1], s2 = g.stride[2];
    const std::size_t n0 = g.n[0], n1 = g.n[1], n2 = g.n[2];
    for (std::size_t k = 0; k < n2; ++k) {
        const bool in2 = g.dim < 3 || (k > 0 && k + 1 < n2);
        for (std::size_t j = 0; j < n1; ++j) {
            const bool in1 = g.dim < 2 || (j > 0 && j + 1 < n1);
            const std::size_t row = j * s1 + k * s2;
            for (std::size_t i = 0; i < n0; ++i) {
                const std::size_t idx = row + i;
                if (!(in2 && in1 && i > 0 && i + 1 < n0)) continue;

                const double u = at.u[idx], v = at.v[idx];
                const double d1 = dir.u[idx], d2 = dir.v[idx];
                double lap1 = -2.0 * g.dim * d1 + dir.u[idx - s0] + dir.u[idx + s0];
                double lap2 = -2.0 * g.dim * d2 + dir.v[idx - s0] + dir.v[idx + s0];
                if (g.dim >= 2) {
                    lap1 += dir.u[idx - s1] + dir.u[idx + s1];
                    lap2 += dir.v[idx - s1] + dir.v[idx + s1];
                }
                if (g.dim >= 3) {
                    lap1 += dir.u[idx - s2] + dir.u[idx + s2];
                    lap2 += dir.v[idx - s2] + dir.v[idx + s2];
                }

                double nl1, nl2, c11, c22, c12;
                if (cubic) {
                    nl1 = 3.0 * c.j2[idx] * u * u;
                    nl2 = 3.0 * c.k2[idx] * v * v;
                    c11 = c.beta * v * v;
                    c22 = c.beta * u * u;
                    c12 = 2.0 * c.beta * u * v;
                } else {
                    nl1 = (2.0 * p - 1.0) * c.j2[idx] * apow(u, 2.0 * p - 2.0);
                    nl2 = (2.0 * p - 1.0) * c.k2[idx] * apow(v, 2.0 * p - 2.0);
                    c11 = c.beta * (p - 1.0) * apow(u, p - 2.0) * apow(v, p);
                    c22 = c.beta * (p - 1.0) * apow(v, p - 2.0) * apow(u, p);
                    c12 = c.beta * p * opow(u, p - 1.0) * opow(v, p - 1.0);
                }
                out.u[idx] = -lap1 * inv_h2 + (c.j1[idx] - nl1 - c11) * d1 - c12 * d2;
                out.v[idx] = -lap2 * inv_h2 + (c.k1[idx] - nl2 - c22) * d2 - c12 * d1;
            }
        }
    }
    return out;
}

double overlap(const FieldPair& fp, double p) {
    const Grid& g = *fp.grid;
    const bool cubic = p == 2.0;
    const double s = sum_nodes(g, [&](std::size_t i) {
        const double u = fp.u[i], v = fp.v[i];
        return cubic ? u * u * v * v : apow(u, p) * apow(v, p);
    });
    return g.cell_volume() * s;
}

double inner(const FieldPair& a, const FieldPair& b) {
    check_same_grid(a, b);
    const Grid& g = *a.grid;
    const double h2 = g.h * g.h;
    double acc = 0.0;
    for (int ax = 0; ax < g.dim; ++ax) {
        acc += sum_edges(g, ax, [&](std::size_t i, std::size_t j) {
            return (a.u[j] - a.u[i]) * (b.u[j] - b.u[i]) + (a.v[j] - a.v[i]) * (b.v[j] - b.v[i]);
        }) / h2;
    }
    acc += sum_nodes(g, [&](std::size_t i) { return a.u[i] * b.u[i] + a.v[i] * b.v[i]; });
    return g.cell_volume() * acc;
}

double norm(const FieldPair& a) { return std::sqrt(inner(a, a)); }

double inner_l2(const FieldPair& a, const FieldPair& b) {
    check_same_grid(a, b);
    const Grid& g = *a.grid;
    return g.cell_volume() *
           sum_nodes(g, [&](std::size_t i) { return a.u[i] * b.u[i] + a.v[i] * b.v[i]; });
}

double norm_l2(const FieldPair& a) { return std::sqrt(inner_l2(a, a)); }

// ---- sine-transform Helmholtz solve ------------------------------------

HelmholtzSolver::HelmholtzSolver(std::shared_ptr<const Grid> grid, double shift)
    : grid_(std::move(grid)), shift_(shift) {
    const Grid& g = *grid_;
    norm_factor_ = 1.0;
    for (int a = 0; a < g.dim; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        const std::size_t m = g.n[ia] - 2;
        m_[ia] = m;
        auto& S = sines_[ia];
        S.resize(m * m);
        for (std::size_t k = 0; k < m; ++k)
            for (std::size_t j = 0; j < m; ++j)
                S[k * m + j] = std::sin(M_PI * static_cast<double>((k + 1) * (j + 1)) /
                                        static_cast<double>(m + 1));
        auto& lam = lambda_[ia];
        lam.resize(m);
        for (std::size_t k = 0; k < m; ++k)
            lam[k] = (2.0 - 2.0 * std::cos(M_PI * static_cast<double>(k + 1) /
                                           static_cast<double>(m + 1))) /
                     (g.h * g.h);
        norm_factor_ *= 2.0 / static_cast<double>(m + 1);
    }
}

void HelmholtzSolver::solve_component(std::span<const double> rhs, std::span<double> out) const {
    const Grid& g = *grid_;
    const std::size_t M = m_[0] * m_[1] * m_[2];
    std::vector<double> work(M);

    // gather interior values (full-node index offset by one layer per used axis)
    const std::array<std::size_t, 3> ms = {1, m_[0], m_[0] * m_[1]};
    auto full_index = [&](std::size_t i, std::size_t j, std::size_t k) {
        const std::size_t fi = i + 1;
        const std::size_t fj = g.dim >= 2 ? j + 1 : j;
        const std::size_t fk = g.dim >= 3 ? k + 1 : k;
        return fi + g.stride[1] * fj + g.stride[2] * fk;
    };
    for (std::size_t k = 0; k < m_[2]; ++k)
        for (std::size_t j = 0; j < m_[1]; ++j)
            for (std::size_t i = 0; i < m_[0]; ++i)
                work[i + ms[1] * j + ms[2] * k] = rhs[full_index(i, j, k)];

    std::vector<double> tmp_in, tmp_out;
    auto transform_axis = [&](int a) {
        const std::size_t m = m_[static_cast<std::size_t>(a)];
        if (m <= 1) return;
        const auto& S = sines_[static_cast<std::size_t>(a)];
        const std::size_t sa = ms[static_cast<std::size_t>(a)];
        const int b = a == 0 ? 1 : 0;
        const int c = a == 2 ? 1 : 2;
        const std::size_t mb = m_[static_cast<std::size_t>(b)], mc = m_[static_cast<std::size_t>(c)];
        const std::size_t sb = ms[static_cast<std::size_t>(b)], sc = ms[static_cast<std::size_t>(c)];
        tmp_in.resize(m);
        tmp_out.resize(m);
        for (std::size_t kc = 0; kc < mc; ++kc) {
            for (std::size_t kb = 0; kb < mb; ++kb) {
                const std::size_t base = kb * sb + kc * sc;
                for (std::size_t j = 0; j < m; ++j) tmp_in[j] = work[base + j * sa];
                for (std::size_t k = 0; k < m; ++k) {
                    const double* row = S.data() + k * m;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) acc += row[j] * tmp_in[j];
                    tmp_out[k] = acc;
                }
                for (std::size_t k = 0; k < m; ++k) work[base + k * sa] = tmp_out[k];
            }
        }
    };

    for (int a = 0; a < g.dim; ++a) transform_axis(a);

    for (std::size_t k = 0; k < m_[2]; ++k)
        for (std::size_t j = 0; j < m_[1]; ++j)
            for (std::size_t i = 0; i < m_[0]; ++i) {
                double lam = shift_ + lambda_[0][i];
                if (g.dim >= 2) lam += lambda_[1][j];
                if (g.dim >= 3) lam += lambda_[2][k];
                work[i + ms[1] * j + ms[2] * k] *= norm_factor_ / lam;
            }

    for (int a = 0; a < g.dim; ++a) transform_axis(a);

    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < m_[2]; ++k)
        for (std::size_t j = 0; j < m_[1]; ++j)
            for (std::size_t i = 0; i < m_[0]; ++i)
                out[full_index(i, j, k)] = work[i + ms[1] * j + ms[2] * k];
}

FieldPair HelmholtzSolver::solve(const FieldPair& rhs) const {
    FieldPair out(rhs.grid);
    solve_component(rhs.u, out.u);
    solve_component(rhs.v, out.v);
    return out;
}

// ---- snapshots -----------------------------------------------------------

void save_snapshot(const FieldPair& fp, const std::string& dir, const std::string& basename,
                   double eps, double beta, double p,
                   const std::array<std::string, 4>& potential_strings) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const Grid& g = *fp.grid;

    auto dump = [&](const std::vector<double>& a, const std::string& path) {
        std::FILE* f = std::fopen(path.c_str(), "w");
        if (!f) throw std::runtime_error("cannot open " + path + " for writing");
        for (double x : a) std::fprintf(f, "%.17g\n", x);
        std::fclose(f);
    };
    dump(fp.u, dir + "/" + basename + ".u.dat");
    dump(fp.v, dir + "/" + basename + ".v.dat");

    nlohmann::ordered_json j;
    j["dim"] = g.dim;
    j["h"] = g.h;
    j["lo"] = std::vector<double>(g.lo.begin(), g.lo.begin() + g.dim);
    j["hi"] = std::vector<double>(g.hi.begin(), g.hi.begin() + g.dim);
    j["n"] = std::vector<std::size_t>(g.n.begin(), g.n.begin() + g.dim);
    j["layout"] = "axis0-fastest";
    j["eps"] = eps;
    j["beta"] = beta;
    j["p"] = p;
    j["J1"] = potential_strings[0];
    j["J2"] = potential_strings[1];
    j["K1"] = potential_strings[2];
    j["K2"] = potential_strings[3];
    std::ofstream side(dir + "/" + basename + ".json");
    side << j.dump(2) << "\n";
}

FieldPair load_snapshot(const std::string& dir, const std::string& basename) {
    std::ifstream side(dir + "/" + basename + ".json");
    if (!side) throw std::runtime_error("cannot open snapshot sidecar for " + basename);
    nlohmann::json j;
    side >> j;

    auto g = std::make_shared<Grid>();
    g->dim = j["dim"].get<int>();
    g->h = j["h"].get<double>();
    const auto lo = j["lo"].get<std::vector<double>>();
    const auto hi = j["hi"].get<std::vector<double>>();
    const auto n = j["n"].get<std::vector<std::size_t>>();
    for (int a = 0; a < g->dim; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        g->lo[ia] = lo[ia];
        g->hi[ia] = hi[ia];
        g->n[ia] = n[ia];
    }
    g->total = g->n[0] * g->n[1] * g->n[2];
    g->stride = {1, g->n[0], g->n[0] * g->n[1]};

    FieldPair fp(g);
    auto slurp = [&](std::vector<double>& a, const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        for (auto& x : a)
            if (!(in >> x)) throw std::runtime_error("snapshot array too short: " + path);
    };
    slurp(fp.u, dir + "/" + basename + ".u.dat");
    slurp(fp.v, dir + "/" + basename + ".v.dat");
    return fp;
}

}  // namespace cnls::field
