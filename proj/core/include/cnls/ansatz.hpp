#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "cnls/field.hpp"
#include "cnls/grid.hpp"
#include "cnls/potentials.hpp"
#include "cnls/profile.hpp"

namespace cnls::ansatz {

/// Two-peak geometry: Q' = Q + sqrt(eps) e1 in original coordinates,
/// P = Q/eps and P' = Q'/eps in rescaled coordinates.
struct Placement {
    double epsilon = 0.0;
    std::vector<double> Q, Qprime;  // original coordinates
    std::vector<double> P, Pprime;  // rescaled coordinates
    int dim = 0;

    double peak_separation() const;  // |P - P'| = eps^{-1/2}
};

/// Builds the placement; if `box` is given, Q and Q' must lie inside it.
Placement place(std::vector<double> Q, double epsilon,
                const potentials::Box* box = nullptr);

/// Radial cutoff: 1 inside eps^{-1/4}, 0 outside 2 eps^{-1/4}, quintic
/// smoothstep bridge in between (max gradient 15/8 eps^{1/4} < 2 eps^{1/4}).
struct CutoffSpec {
    double epsilon = 0.0;
    double inner_radius = 0.0;
    double outer_radius = 0.0;

    static CutoffSpec make(double eps);
};

double cutoff_value(double radius, const CutoffSpec& spec);
double cutoff_value(std::span<const double> x, const CutoffSpec& spec);
double cutoff_gradient_bound(const CutoffSpec& spec);

/// Truncated two-peak trial pair on the grid with the generating potential
/// values recorded.
struct AnsatzPair {
    field::FieldPair fields;
    Placement placement;
    double J1Q = 1.0, J2Q = 1.0, K1Q = 1.0, K2Q = 1.0;
};

/// Builds ansatz pairs and tangent bases for a fixed base profile W and
/// potential set; profile rescaling follows the generating values at Q.
class AnsatzBuilder {
public:
    AnsatzBuilder(const potentials::PotentialSet* pset,
                  std::shared_ptr<const profile::GroundStateProfile> w_profile);

    AnsatzPair build(const Placement& placement, std::shared_ptr<const field::Grid> grid) const;

    /// u = chi(|x-P|) U^Q(|x-P|), v likewise around P'; throws if either
    /// support is clipped by the window.
    field::FieldPair sample_pair(const Placement& placement, std::shared_ptr<const field::Grid> grid) const;

    struct TangentBasis {
        std::vector<field::FieldPair> ortho;  // H1-orthonormal
        std::vector<field::FieldPair> raw;    // central differences in P_i
        std::vector<double> raw_norms;
    };
    /// Central differences of the full construction in the peak parameter P
    /// (step in rescaled coordinates), modified Gram-Schmidt in the H1 pairing.
    TangentBasis tangent_basis(const Placement& placement, std::shared_ptr<const field::Grid> grid,
                               double step) const;

    const potentials::PotentialSet& pset() const { return *pset_; }
    const std::shared_ptr<const profile::GroundStateProfile>& base_profile() const { return w_; }

private:
    const potentials::PotentialSet* pset_;
    std::shared_ptr<const profile::GroundStateProfile> w_;
};

}  // namespace cnls::ansatz
