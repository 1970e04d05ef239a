#include "cnls/ansatz.hpp"

#include <cmath>
#include <stdexcept>

namespace cnls::ansatz {

double Placement::peak_separation() const {
    double s = 0.0;
    for (std::size_t a = 0; a < P.size(); ++a) s += (P[a] - Pprime[a]) * (P[a] - Pprime[a]);
    return std::sqrt(s);
}

Placement place(std::vector<double> Q, double epsilon, const potentials::Box* box) {
    if (epsilon <= 0.0) throw std::invalid_argument("place: epsilon must be positive");
    if (Q.empty() || Q.size() > 3) throw std::invalid_argument("place: Q must have 1..3 coordinates");

    Placement pl;
    pl.epsilon = epsilon;
    pl.dim = static_cast<int>(Q.size());
    pl.Q = std::move(Q);
    pl.Qprime = pl.Q;
    pl.Qprime[0] += std::sqrt(epsilon);  // offset along e1, as in the construction

    if (box) {
        if (!box->contains(pl.Q)) throw std::domain_error("place: Q outside the configured box");
        if (!box->contains(pl.Qprime))
            throw std::domain_error("place: Q + sqrt(eps) e1 outside the configured box");
    }

    pl.P.resize(pl.Q.size());
    pl.Pprime.resize(pl.Q.size());
    for (std::size_t a = 0; a < pl.Q.size(); ++a) {
        pl.P[a] = pl.Q[a] / epsilon;
        pl.Pprime[a] = pl.Qprime[a] / epsilon;
    }
    return pl;
}

CutoffSpec CutoffSpec::make(double eps) {
    if (eps <= 0.0) throw std::invalid_argument("cutoff: epsilon must be positive");
    CutoffSpec s;
    s.epsilon = eps;
    s.inner_radius = std::pow(eps, -0.25);
    s.outer_radius = 2.0 * s.inner_radius;
    return s;
}

double cutoff_value(double radius, const CutoffSpec& spec) {
    radius = std::abs(radius);
    if (radius <= spec.inner_radius) return 1.0;
    if (radius >= spec.outer_radius) return 0.0;
    const double t = (radius - spec.inner_radius) / (spec.outer_radius - spec.inner_radius);
    const double s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));  // quintic smoothstep
    return 1.0 - s;
}

double cutoff_value(std::span<const double> x, const CutoffSpec& spec) {
    double r2 = 0.0;
    for (double xi : x) r2 += xi * xi;
    return cutoff_value(std::sqrt(r2), spec);
}

double cutoff_gradient_bound(const CutoffSpec& spec) {
    // max |s'| = 15/8 over the unit bridge, divided by the bridge width
    return (15.0 / 8.0) / (spec.outer_radius - spec.inner_radius);
}

AnsatzBuilder::AnsatzBuilder(const potentials::PotentialSet* pset,
                             std::shared_ptr<const profile::GroundStateProfile> w_profile)
    : pset_(pset), w_(std::move(w_profile)) {
    if (!pset_ || !w_) throw std::invalid_argument("AnsatzBuilder: null inputs");
    if (pset_->dim() != w_->dim)
        throw std::invalid_argument("AnsatzBuilder: potential/profile dimension mismatch");
}

namespace {

void check_support_inside(const field::Grid& g, std::span<const double> center, double outer) {
    for (int a = 0; a < g.dim; ++a) {
        const auto ia = static_cast<std::size_t>(a);
        if (center[ia] - outer < g.lo[ia] - 1e-12 || center[ia] + outer > g.hi[ia] + 1e-12)
            throw std::runtime_error("ansatz support clipped by the grid window");
    }
}

void add_peak(std::vector<double>& dst, const field::Grid& g, const profile::RescaledProfile& prof,
              const CutoffSpec& cut) {
    double x[3];
    for (std::size_t idx = 0; idx < g.total; ++idx) {
        g.coords(idx, x);
        double r2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const double d = x[a] - prof.center[static_cast<std::size_t>(a)];
            r2 += d * d;
        }
        const double r = std::sqrt(r2);
        if (r >= cut.outer_radius) continue;
        dst[idx] = cutoff_value(r, cut) * prof.value_at_radius(r);
    }
}

}  // namespace

field::FieldPair AnsatzBuilder::sample_pair(const Placement& placement,
                                            std::shared_ptr<const field::Grid> grid) const {
    const auto cut = CutoffSpec::make(placement.epsilon);
    check_support_inside(*grid, placement.P, cut.outer_radius);
    check_support_inside(*grid, placement.Pprime, cut.outer_radius);

    const auto vq = pset_->values(placement.Q);
    const auto uprof = profile::rescale_profile(w_, vq[0], vq[1], placement.P);
    const auto vprof = profile::rescale_profile(w_, vq[2], vq[3], placement.Pprime);

    field::FieldPair fp(grid);
    add_peak(fp.u, *grid, uprof, cut);
    add_peak(fp.v, *grid, vprof, cut);
    fp.zero_boundary();
    return fp;
}

AnsatzPair AnsatzBuilder::build(const Placement& placement, std::shared_ptr<const field::Grid> grid) const {
    AnsatzPair pair;
    pair.fields = sample_pair(placement, grid);
    pair.placement = placement;
    const auto vq = pset_->values(placement.Q);
    pair.J1Q = vq[0];
    pair.J2Q = vq[1];
    pair.K1Q = vq[2];
    pair.K2Q = vq[3];
    return pair;
}

AnsatzBuilder::TangentBasis AnsatzBuilder::tangent_basis(const Placement& placement,
                                                         std::shared_ptr<const field::Grid> grid,
                                                         double step) const {
    if (step <= 0.0) throw std::invalid_argument("tangent_basis: step must be positive");
    const int dim = placement.dim;
    TangentBasis basis;
    basis.raw.reserve(static_cast<std::size_t>(dim));

    for (int a = 0; a < dim; ++a) {
        auto shifted = [&](double sign) {
            Placement pl = placement;
            pl.P[static_cast<std::size_t>(a)] += sign * step;
            pl.Pprime[static_cast<std::size_t>(a)] += sign * step;
            pl.Q[static_cast<std::size_t>(a)] += sign * step * placement.epsilon;
            pl.Qprime[static_cast<std::size_t>(a)] += sign * step * placement.epsilon;
            return sample_pair(pl, grid);
        };
        field::FieldPair diff = shifted(+1.0);
        diff.axpy(-1.0, shifted(-1.0));
        diff.scale(1.0 / (2.0 * step));
        basis.raw.push_back(std::move(diff));
    }

    // modified Gram-Schmidt in the H1 pairing
    basis.ortho.reserve(basis.raw.size());
    basis.raw_norms.reserve(basis.raw.size());
    for (const auto& r : basis.raw) {
        basis.raw_norms.push_back(field::norm(r));
        field::FieldPair e = r;
        for (const auto& prev : basis.ortho) e.axpy(-field::inner(e, prev), prev);
        const double n = field::norm(e);
        if (n < 1e-12)
            throw std::runtime_error("tangent basis degenerate: grid resolution far too coarse");
        e.scale(1.0 / n);
        basis.ortho.push_back(std::move(e));
    }
    return basis;
}

}  // namespace cnls::ansatz
