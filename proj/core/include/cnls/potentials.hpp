#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cnls/expr.hpp"

namespace cnls::potentials {

/// Axis-aligned box, the computational stand-in for the paper-level domain.
struct Box {
    std::vector<double> lo, hi;

    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(std::span<const double> q) const;
    double diameter() const;
};

struct Bounds {
    double lower = 1e-6;  // the C > 0 of the hypotheses
    double upper = 1e6;   // the boundedness constant
};

/// The four potentials of the coupled system plus their declared bounds.
/// Gradient trees are differentiated once at construction.
class PotentialSet {
public:
    PotentialSet(expr::Expression j1, expr::Expression j2, expr::Expression k1, expr::Expression k2,
                 int dim, std::array<Bounds, 4> bounds = {});
    static PotentialSet from_strings(const std::string& j1, const std::string& j2,
                                     const std::string& k1, const std::string& k2, int dim,
                                     std::array<Bounds, 4> bounds = {});

    int dim() const { return dim_; }
    double j1(std::span<const double> q) const { return exprs_[0].eval(q); }
    double j2(std::span<const double> q) const { return exprs_[1].eval(q); }
    double k1(std::span<const double> q) const { return exprs_[2].eval(q); }
    double k2(std::span<const double> q) const { return exprs_[3].eval(q); }
    /// {J1, J2, K1, K2} at q.
    std::array<double, 4> values(std::span<const double> q) const;
    /// Gradient of potential `which` (0..3) at q.
    std::vector<double> gradient(int which, std::span<const double> q) const;

    const expr::Expression& expression(int which) const { return exprs_[static_cast<std::size_t>(which)]; }
    const Bounds& declared_bounds(int which) const { return bounds_[static_cast<std::size_t>(which)]; }
    static const char* name(int which);  // "J1", "J2", "K1", "K2"

private:
    std::array<expr::Expression, 4> exprs_;
    std::array<std::vector<expr::Expression>, 4> grads_;
    std::array<Bounds, 4> bounds_;
    int dim_;
};

// ---- hypothesis validation ---------------------------------------------

struct Violation {
    int which;                  // potential index
    std::vector<double> point;
    double value;               // offending value or gradient norm
    std::string reason;
};

struct ValidationReport {
    bool pass = false;
    std::array<double, 4> min_value{}, max_value{}, max_gradient_norm{};
    std::vector<Violation> violations;  // capped
};

/// Checks C <= value <= M and |grad| <= M for each potential over a sample
/// lattice of `samples_per_axis` points per axis (>= 2).
ValidationReport validate_hypotheses(const PotentialSet& pset, const Box& box, int samples_per_axis);

// ---- concentration landscapes --------------------------------------------

/// J1^{1/2} J2^{-1} + K1^{1/2} K2^{-1}; requires all four positive at q.
double gamma(const PotentialSet& pset, std::span<const double> q);

/// General-exponent landscape J1^{p/(p-1)-N/2} J2^{-1/(p-1)} + (K analog).
/// Admissible: N >= 3 with 2 < 2p < 2N/(N-2), or N in {1,2} with p > 1.
double gamma_bar(const PotentialSet& pset, std::span<const double> q, double p, int N);

struct GammaSpec {
    bool classic = true;  // classic = the (p=2, N=3) landscape
    double p = 2.0;
    int N = 3;

    static GammaSpec make_classic() { return {}; }
    static GammaSpec general(double p, int N) { return {false, p, N}; }
};

double landscape_value(const PotentialSet& pset, std::span<const double> q, const GammaSpec& spec);

enum class CritKind { Min, Max, Saddle, Degenerate };
const char* to_string(CritKind k);

struct CriticalPoint {
    std::vector<double> q;
    double value = 0.0;
    CritKind kind = CritKind::Degenerate;
    double isolation_radius = 0.0;
    double grad_norm = 0.0;
};

struct LandscapeReport {
    std::vector<CriticalPoint> critical_points;
    GammaSpec gamma_kind;
    bool degenerate_landscape = false;  // landscape flat over the seed lattice
    std::string to_json() const;
};

struct CriticalSearchOptions {
    int seeds_per_axis = 5;
    double grad_tol = 1e-8;          // convergence on the landscape gradient
    double hess_eig_tol = 1e-6;      // below this magnitude a curvature sign is not assigned
    double dedup_rel = 1e-4;         // merge radius relative to the box diameter
    double shrink_rel = 0.02;        // box shrink per side for seeding and clamping
    int max_iterations = 120;
};

/// Multistart Newton-type search for critical points of the landscape over
/// the (shrunken) box. Minima/maxima/saddles are classified from the
/// finite-difference Hessian; nearby finds are merged.
LandscapeReport find_critical_points(const PotentialSet& pset, const Box& box, const GammaSpec& spec,
                                     const CriticalSearchOptions& opt = {});

}  // namespace cnls::potentials
