#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

namespace cnls::ansatz {
struct Placement;
}

namespace cnls::field {

/// Uniform tensor grid over a box window in rescaled coordinates, with a
/// one-layer homogeneous Dirichlet boundary. Axis 0 is the peak-offset axis.
struct Grid {
    int dim = 0;
    double h = 0.0;
    std::array<double, 3> lo{}, hi{};
    std::array<std::size_t, 3> n{1, 1, 1};       // node counts (1 on unused axes)
    std::array<std::size_t, 3> stride{1, 1, 1};
    std::size_t total = 1;

    std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const {
        return i + stride[1] * j + stride[2] * k;
    }
    std::array<std::size_t, 3> multi(std::size_t flat) const {
        return {flat % n[0], (flat / n[0]) % n[1], flat / (n[0] * n[1])};
    }
    void coords(std::size_t flat, double out[3]) const {
        const auto m = multi(flat);
        for (int a = 0; a < 3; ++a) out[a] = lo[static_cast<std::size_t>(a)] + h * static_cast<double>(m[static_cast<std::size_t>(a)]);
    }
    bool is_boundary(std::size_t flat) const {
        const auto m = multi(flat);
        for (int a = 0; a < dim; ++a)
            if (m[static_cast<std::size_t>(a)] == 0 || m[static_cast<std::size_t>(a)] + 1 == n[static_cast<std::size_t>(a)]) return true;
        return false;
    }
    std::size_t interior_per_axis(int a) const { return n[static_cast<std::size_t>(a)] - 2; }
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= h;
        return v;
    }
};

/// Box window spanning [P - margin, P' + margin] on axis 0 and symmetric
/// margins elsewhere. margin must cover the cutoff support radius 2 eps^{-1/4}.
std::shared_ptr<const Grid> make_grid(const ansatz::Placement& placement, double margin, double h,
                                      std::size_t node_cap = 20'000'000);

/// Standalone window for tests and 1D work.
std::shared_ptr<const Grid> make_box_grid(int dim, const std::array<double, 3>& lo,
                                          const std::array<double, 3>& hi, double h,
                                          std::size_t node_cap = 20'000'000);

/// Discretized (u, v) on a grid; zero on the Dirichlet boundary layer.
struct FieldPair {
    std::shared_ptr<const Grid> grid;
    std::vector<double> u, v;

    FieldPair() = default;
    explicit FieldPair(std::shared_ptr<const Grid> g)
        : grid(std::move(g)), u(grid->total, 0.0), v(grid->total, 0.0) {}

    void zero() {
        std::fill(u.begin(), u.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
    }
    void zero_boundary();
    /// this += a * x
    void axpy(double a, const FieldPair& x);
    void scale(double a);
    double max_abs() const;
    double min_interior() const;  // positivity monitor
};

}  // namespace cnls::field
