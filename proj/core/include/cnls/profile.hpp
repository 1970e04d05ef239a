#pragma once

#include <memory>
#include <string>
#include <vector>

namespace cnls::profile {

/// Radial samples of the model ground state W solving
///   -W'' - (N-1)/r W' + W = W^{2p-1},  W'(0) = 0,  W > 0,  W decaying,
/// on a uniform grid [0, r_max]. Immutable after solve_profile.
struct GroundStateProfile {
    int dim = 0;
    double p = 2.0;
    double shoot_amplitude = 0.0;  // W(0)
    double r_max = 0.0;
    double step = 0.0;
    double residual_rms = 0.0;     // high-order FD residual of the ODE over the samples
    std::vector<double> r, values, derivative_values;

    /// Cubic Hermite interpolation using the stored derivatives; exponential
    /// continuation beyond r_max.
    double value(double radius) const;
    double deriv(double radius) const;
};

struct ProfileOptions {
    double decay_tol = 1e-8;
    double ode_step = 5e-4;
    double r_max = 20.0;
    double bracket_lo = 1.0;
    int max_bisect = 200;
};

/// Shoot for the ground state amplitude W(0) by bisection between the
/// turn-back-up (amplitude too small) and crossing-to-negative (too large)
/// behaviors, then integrate the profile with a fixed-step RK4 scheme and a
/// series start at r = 0.
GroundStateProfile solve_profile(int N, double p, const ProfileOptions& opt = {});
GroundStateProfile solve_profile(int N, double p, double decay_tol, double ode_step);

/// Integral of W^q over R^N via the radial representation
/// surface(N) * int_0^rmax W(r)^q r^{N-1} dr, composite Simpson.
double moment(const GroundStateProfile& profile, double q);

/// Integral of W'(r)^2 over R^N (radial), i.e. |grad W|^2 for radial W.
double gradient_moment(const GroundStateProfile& profile);

/// W scaled per the generating potential values: amplitude (J1/J2)^{1/(2p-2)},
/// width sqrt(J1), shifted to `center` (rescaled coordinates).
struct RescaledProfile {
    std::shared_ptr<const GroundStateProfile> base;
    double amplitude = 1.0;
    double width = 1.0;
    std::vector<double> center;

    double value_at_radius(double radius) const { return amplitude * base->value(width * radius); }
    double deriv_at_radius(double radius) const { return amplitude * width * base->deriv(width * radius); }
    double peak_value() const { return amplitude * base->shoot_amplitude; }
};

RescaledProfile rescale_profile(std::shared_ptr<const GroundStateProfile> profile, double J1, double J2,
                                std::vector<double> center);

/// The limit-energy constants of the reduced expansion for one component.
/// `nehari_value` is (p-1)/(2p) * scaling * int W^{2p} (from the Nehari identity),
/// `half_value` is the same with coefficient 1/2, and `direct_quadrature` is
/// Fville = 1/2 int(|grad U|^2 + J1 U^2) - 1/(2p) int J2 U^{2p} computed radially.
struct LimitEnergy {
    double nehari_value = 0.0;
    double half_value = 0.0;
    double direct_quadrature = 0.0;
};
LimitEnergy limit_energy(const GroundStateProfile& profile, double J1, double J2);

/// (paper_c0, nehari_c0) = (1/2, 1/4) * int W^4; requires p == 2.
std::pair<double, double> c0_candidates(const GroundStateProfile& profile);

/// Two-column text table (r, W) with a header line recording N, p, W(0).
void save_table(const GroundStateProfile& profile, const std::string& path);
GroundStateProfile load_table(const std::string& path);

}  // namespace cnls::profile
