#pragma once

#include <span>
#include <string>

#include "cnls/grid.hpp"
#include "cnls/potentials.hpp"

namespace cnls::field {

/// Potential samples J_i(eps x), K_i(eps x) on the grid nodes plus the run
/// parameters; sampled once per (grid, eps) and shared by all field operations.
struct Coefficients {
    std::shared_ptr<const Grid> grid;
    double eps = 0.0;
    double beta = -1.0;  // repulsive: beta < 0 (beta == 0 allowed for decoupled tests)
    double p = 2.0;
    std::vector<double> j1, j2, k1, k2;
};

Coefficients sample_coefficients(const potentials::PotentialSet& pset,
                                 std::shared_ptr<const Grid> grid, double eps, double beta, double p);

struct EnergyBreakdown {
    double jpart = 0.0;
    double kpart = 0.0;
    double coupling = 0.0;
    double total = 0.0;
};

/// f_eps via trapezoid node sums and staggered edge gradients; the sum order
/// is a fixed pairwise tree, so results are reproducible bit for bit.
EnergyBreakdown energy(const FieldPair& fp, const Coefficients& c);

/// Strong-form residual of the first variation on interior nodes
/// (-Lap u + J1 u - J2 |u|^{2p-2}u - beta |u|^{p-2}u |v|^p, ...), zero on the
/// boundary. Pairs with energy() exactly: <grad, d>_L2 = dE[d] to rounding.
FieldPair grad_residual(const FieldPair& fp, const Coefficients& c);

/// Linearization of grad_residual at `at` applied to `dir`.
FieldPair hess_apply(const FieldPair& at, const FieldPair& dir, const Coefficients& c);

/// Quadrature of |u|^p |v|^p.
double overlap(const FieldPair& fp, double p);

/// Discrete H1_0 x H1_0 pairing: edge-gradient products plus node products.
double inner(const FieldPair& a, const FieldPair& b);
double norm(const FieldPair& a);
double inner_l2(const FieldPair& a, const FieldPair& b);
double norm_l2(const FieldPair& a);

/// Exact (-Lap + shift)^{-1} with Dirichlet boundary via separable sine
/// transforms; also the Riesz map from strong residuals to H1 gradients.
class HelmholtzSolver {
public:
    explicit HelmholtzSolver(std::shared_ptr<const Grid> grid, double shift = 1.0);
    FieldPair solve(const FieldPair& rhs) const;
    void solve_component(std::span<const double> rhs, std::span<double> out) const;

private:
    std::shared_ptr<const Grid> grid_;
    double shift_;
    std::array<std::size_t, 3> m_{1, 1, 1};  // interior sizes
    std::array<std::vector<double>, 3> sines_;
    std::array<std::vector<double>, 3> lambda_;
    double norm_factor_ = 1.0;
};

// spec-shaped conveniences; sample coefficients per call
inline EnergyBreakdown energy(const FieldPair& fp, const potentials::PotentialSet& pset, double eps,
                              double beta, double p) {
    return energy(fp, sample_coefficients(pset, fp.grid, eps, beta, p));
}
inline FieldPair grad_residual(const FieldPair& fp, const potentials::PotentialSet& pset, double eps,
                               double beta, double p) {
    return grad_residual(fp, sample_coefficients(pset, fp.grid, eps, beta, p));
}

/// Plain-text array dump (one value per line, axis-0 fastest) with a JSON
/// sidecar holding grid metadata and run parameters.
void save_snapshot(const FieldPair& fp, const std::string& dir, const std::string& basename,
                   double eps, double beta, double p,
                   const std::array<std::string, 4>& potential_strings);
FieldPair load_snapshot(const std::string& dir, const std::string& basename);

}  // namespace cnls::field
