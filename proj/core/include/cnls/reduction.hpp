#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "cnls/ansatz.hpp"
#include "cnls/field.hpp"
#include "cnls/potentials.hpp"
#include "cnls/profile.hpp"

namespace cnls::reduce {

struct MinresStats {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    bool stagnated = false;
};

/// MINRES in the discrete H1 pairing for operators self-adjoint in it.
/// Solves A x = b to a relative residual; x is overwritten (initial guess 0).
MinresStats minres_h1(const std::function<field::FieldPair(const field::FieldPair&)>& A,
                      const field::FieldPair& b, field::FieldPair& x, double rel_tol, int max_iter);

struct SessionOptions {
    double grid_h = 0.25;
    double margin = 8.0;  // raised automatically to the cutoff support radius
    std::size_t node_cap = 20'000'000;
    double tangent_step = 1e-3;
    double tol_linear = 1e-3;      // relative tolerance of inner corrector solves
    int max_linear_iter = 3000;
    double tol_corrector = 1e-8;   // projected gradient norm target
    int max_corrector_iter = 40;
    bool relinearize = false;      // full-Newton variant of the corrector
    std::uint64_t seed = 1234;
};

struct CorrectorResult {
    field::FieldPair w;
    int iterations = 0;
    double residual_norm = 0.0;  // projected H1 gradient at ansatz + w
    double w_norm = 0.0;
    std::vector<double> contraction_ratios;
    double max_tangent_overlap = 0.0;  // max_i |<w, b_i>| / ||w||
    bool converged = false;
    bool contraction_failure = false;
    int quasi_null_modes_used = 0;  // deflated scaling modes (near-critical exponents)
};

struct ReducedSample {
    std::vector<double> Q;
    double epsilon = 0.0;
    double A_value = 0.0;
    double gamma_value = 0.0;     // general-exponent landscape at the run's (p, N)
    double disc_half = 0.0;       // A - (1/2 int W^{2p}) Gamma
    double disc_nehari = 0.0;     // A - ((p-1)/(2p) int W^{2p}) Gamma
    double corrector_residual = 0.0;
    double corrector_norm = 0.0;
    int corrector_iterations = 0;
};

struct SpectralReport {
    double ansatz_quotient = 0.0;          // Rayleigh quotient along the ansatz pair
    double min_complement_quotient = 0.0;  // over the probed enlarged complement
    std::vector<double> sample_quotients;
};

/// One (Q, eps) instance of the reduced problem: grid, sampled coefficients,
/// ansatz pair, orthonormal tangent basis, Riesz map. Immutable after
/// construction; all members are shareable read-only.
class Session {
public:
    Session(const potentials::PotentialSet& pset,
            std::shared_ptr<const profile::GroundStateProfile> w_profile, std::vector<double> Q,
            double eps, double beta, SessionOptions opt,
            std::shared_ptr<const field::Grid> grid_override = nullptr);

    const field::Grid& grid() const { return *grid_; }
    std::shared_ptr<const field::Grid> grid_ptr() const { return grid_; }
    const ansatz::AnsatzPair& trial() const { return ansatz_; }
    const std::vector<field::FieldPair>& tangent() const { return basis_.ortho; }
    const ansatz::AnsatzBuilder::TangentBasis& tangent_full() const { return basis_; }
    /// Tangent basis plus the array-level derivative directions of the
    /// ansatz. The two differ at O(h^2); keeping both in the projected-out
    /// span removes near-null translation remnants from the complement.
    const std::vector<field::FieldPair>& projection_basis() const { return proj_basis_; }
    const field::Coefficients& coefficients() const { return coeffs_; }
    const SessionOptions& options() const { return opt_; }
    double epsilon() const { return eps_; }
    const std::vector<double>& Q() const { return Q_; }
    double p() const { return coeffs_.p; }

    /// Removes the H1 components along the tangent basis.
    field::FieldPair project(field::FieldPair fp) const;
    /// H1 gradient (Riesz representative of the first variation) at `at`.
    field::FieldPair riesz_gradient(const field::FieldPair& at) const;
    /// riesz . hess_apply linearized at `at` (defaults to the ansatz).
    field::FieldPair apply_hessian_riesz(const field::FieldPair& at, const field::FieldPair& d) const;
    /// The reduced operator: project . riesz . hess(ansatz) . project.
    field::FieldPair apply_L(const field::FieldPair& d) const;

    struct LinearResult {
        field::FieldPair x;
        MinresStats stats;
    };
    /// Krylov solve of apply_L(x) = rhs on the tangent complement.
    LinearResult solve_projected_linear(const field::FieldPair& rhs, double rel_tol,
                                        int max_iter) const;

    /// Contraction iteration for the orthogonal corrector (w, w').
    CorrectorResult corrector(const field::FieldPair* warm_start = nullptr) const;

    /// Energy at ansatz + corrector with discrepancies against both constants.
    ReducedSample reduced_energy(const CorrectorResult& cr) const;
    ReducedSample reduced_energy() const;

    /// Rayleigh quotient dichotomy probe; `samples` random directions in the
    /// complement of tangent + ansatz span, refined by inverse iteration.
    SpectralReport spectral_probe(int samples, int inverse_steps = 4) const;

    /// Inverse-iteration estimate of the smallest |eigenvalue| of apply_L on
    /// the tangent complement (the invertibility constant of the lemma).
    double smallest_eigen_magnitude(int inverse_steps = 6) const;

    /// Near-null eigenvectors of apply_L (|lambda| below `threshold`), found
    /// by deflated inverse iteration and cached. Empty at subcritical
    /// exponents; at the L2-critical exponent these are the two scaling
    /// modes, which the corrector treats as explicit coordinates.
    const std::vector<field::FieldPair>& quasi_null_modes(double threshold = 0.05) const;

    double energy_total(const field::FieldPair& fp) const { return field::energy(fp, coeffs_).total; }
    double c_half() const { return c_half_; }
    double c_nehari() const { return c_nehari_; }

    const potentials::PotentialSet& pset() const { return *pset_; }
    const std::shared_ptr<const profile::GroundStateProfile>& base_profile() const {
        return builder_.base_profile();
    }

private:
    const potentials::PotentialSet* pset_;
    ansatz::AnsatzBuilder builder_;
    SessionOptions opt_;
    double eps_;
    std::vector<double> Q_;
    ansatz::Placement placement_;
    std::shared_ptr<const field::Grid> grid_;
    field::Coefficients coeffs_;
    ansatz::AnsatzPair ansatz_;
    ansatz::AnsatzBuilder::TangentBasis basis_;
    std::vector<field::FieldPair> proj_basis_;
    std::unique_ptr<field::HelmholtzSolver> riesz_;
    double c_half_ = 0.0, c_nehari_ = 0.0;
    mutable std::vector<field::FieldPair> quasi_null_;
    mutable bool quasi_null_ready_ = false;
};

/// Effective margin for a given eps: the configured margin, raised to cover
/// the cutoff support plus one layer of cells.
double effective_margin(double margin, double eps, double h);

/// Central finite differences of the reduced energy in Q; all stencil
/// sessions share one enlarged grid and warm-start from the center corrector.
std::vector<double> reduced_gradient(const potentials::PotentialSet& pset,
                                     std::shared_ptr<const profile::GroundStateProfile> w_profile,
                                     const std::vector<double>& Q, double eps, double beta,
                                     const SessionOptions& opt, double fd_step = 0.0);

enum class OptimizeMode { Min, Max };

struct OptimizeResult {
    std::vector<double> Qstar;
    ReducedSample sample;
    int gradient_evaluations = 0;
    int steps = 0;
    bool converged = false;
    bool degenerate_landscape = false;  // vanishing reduced gradient at the seed
};

struct OptimizeOptions {
    double grad_tol = 1e-4;
    int max_steps = 25;
    double fd_step = 0.0;  // 0: sqrt(eps)/8
    double min_step = 1e-4;
};

/// Projected descent/ascent with backtracking on the reduced energy.
OptimizeResult optimize_reduced(const potentials::PotentialSet& pset,
                                std::shared_ptr<const profile::GroundStateProfile> w_profile,
                                std::vector<double> Q0, double eps, double beta,
                                const potentials::Box& qbox, OptimizeMode mode,
                                const SessionOptions& opt, const OptimizeOptions& oopt = {});

/// Smooth random pair (sum of a few Gaussian bumps per component), zero on
/// the boundary; used for probe directions and consistency tests.
field::FieldPair random_smooth_pair(std::shared_ptr<const field::Grid> grid, std::mt19937_64& rng);

}  // namespace cnls::reduce
