#include "cnls/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cnls/ansatz.hpp"

namespace cnls::field {

namespace {

std::shared_ptr<const Grid> finalize(int dim, std::array<double, 3> lo, std::array<double, 3> hi,
                                     double h, std::size_t node_cap) {
    if (h <= 0.0) throw std::invalid_argument("grid spacing h must be positive");
    auto g = std::make_shared<Grid>();
    g->dim = dim;
    g->h = h;
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        const double extent = hi[ia] - lo[ia];
        const auto cells = static_cast<std::size_t>(std::ceil(extent / h - 1e-12));
        g->n[ia] = cells + 1;
        g->lo[ia] = lo[ia];
        g->hi[ia] = lo[ia] + h * static_cast<double>(cells);  // snap to uniform spacing
        if (g->n[ia] < 10)
            throw std::invalid_argument("grid too coarse: need at least 8 interior nodes per axis");
        total *= g->n[ia];
        if (total > node_cap) throw std::runtime_error("grid node count exceeds the configured cap");
    }
    g->total = total;
    g->stride = {1, g->n[0], g->n[0] * g->n[1]};
    return g;
}

}  // namespace

std::shared_ptr<const Grid> make_grid(const ansatz::Placement& placement, double margin, double h,
                                      std::size_t node_cap) {
    const int dim = placement.dim;
    const double support = 2.0 * std::pow(placement.epsilon, -0.25);
    if (margin < support)
        throw std::invalid_argument("grid margin smaller than the cutoff support radius: supports clipped");
    std::array<double, 3> lo{}, hi{};
    lo[0] = placement.P[0] - margin;
    hi[0] = placement.Pprime[0] + margin;
    for (int a = 1; a < dim; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        lo[ia] = placement.P[ia] - margin;
        hi[ia] = placement.P[ia] + margin;
    }
    return finalize(dim, lo, hi, h, node_cap);
}

std::shared_ptr<const Grid> make_box_grid(int dim, const std::array<double, 3>& lo,
                                          const std::array<double, 3>& hi, double h,
                                          std::size_t node_cap) {
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    return finalize(dim, lo, hi, h, node_cap);
}

void FieldPair::zero_boundary() {
    const Grid& g = *grid;
    for (std::size_t idx = 0; idx < g.total; ++idx) {
        if (g.is_boundary(idx)) {
            u[idx] = 0.0;
            v[idx] = 0.0;
        }
    }
}

void FieldPair::axpy(double a, const FieldPair& x) {
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += a * x.u[i];
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += a * x.v[i];
}

void FieldPair::scale(double a) {
    for (auto& x : u) x *= a;
    for (auto& x : v) x *= a;
}

double FieldPair::max_abs() const {
    double m = 0.0;
    for (double x : u) m = std::max(m, std::abs(x));
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double FieldPair::min_interior() const {
    double m = std::numeric_limits<double>::infinity();
    const Grid& g = *grid;
    for (std::size_t idx = 0; idx < g.total; ++idx) {
        if (g.is_boundary(idx)) continue;
        m = std::min(m, std::min(u[idx], v[idx]));
    }
    return m;
}

}  // namespace cnls::field
