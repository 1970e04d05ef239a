#include "cnls/profile.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "cnls/numeric.hpp"

namespace cnls::profile {

namespace {

// odd extension keeps mis-shoots finite when the iterate dips negative
inline double nl_power(double w, double expo) {
    return w >= 0.0 ? std::pow(w, expo) : -std::pow(-w, expo);
}

struct Rhs {
    int N;
    double expo;  // 2p - 1

    // y = (w, w'), regular part only; callers avoid r = 0
    void operator()(double r, const double y[2], double out[2]) const {
        out[0] = y[1];
        out[1] = -(N - 1) / r * y[1] + y[0] - nl_power(y[0], expo);
    }
};

enum class Shot { Undershoot, Overshoot };

struct Integration {
    std::vector<double> w, dw;
    std::size_t event_index;  // first contaminated sample (== w.size() if none)
    Shot shot;
};

// Series start: w(r) = a + c2 r^2 + c4 r^4 with
//   c2 = F(a)/(2N), c4 = F'(a) c2 / (4N + 8),  F(w) = w - w^{2p-1}.
void series_state(double a, int N, double p, double r, double out[2]) {
    const double F = a - nl_power(a, 2.0 * p - 1.0);
    const double Fp = 1.0 - (2.0 * p - 1.0) * std::pow(std::abs(a), 2.0 * p - 2.0);
    const double c2 = F / (2.0 * N);
    const double c4 = Fp * c2 / (4.0 * N + 8.0);
    out[0] = a + c2 * r * r + c4 * r * r * r * r;
    out[1] = 2.0 * c2 * r + 4.0 * c4 * r * r * r;
}

Integration integrate(double a, int N, double p, double h, double r_max, bool record) {
    const auto steps = static_cast<std::size_t>(std::llround(r_max / h));
    Rhs rhs{N, 2.0 * p - 1.0};

    Integration out;
    if (record) {
        out.w.reserve(steps + 1);
        out.dw.reserve(steps + 1);
        out.w.push_back(a);
        out.dw.push_back(0.0);
    }

    double y[2];
    series_state(a, N, p, h, y);
    if (record) {
        out.w.push_back(y[0]);
        out.dw.push_back(y[1]);
    }

    out.event_index = steps + 1;
    out.shot = Shot::Undershoot;
    const double turn_tol = 1e-12 * std::max(1.0, a);

    for (std::size_t i = 1; i < steps; ++i) {
        const double r = static_cast<double>(i) * h;
        double k1[2], k2[2], k3[2], k4[2], t[2];
        rhs(r, y, k1);
        t[0] = y[0] + 0.5 * h * k1[0]; t[1] = y[1] + 0.5 * h * k1[1];
        rhs(r + 0.5 * h, t, k2);
        t[0] = y[0] + 0.5 * h * k2[0]; t[1] = y[1] + 0.5 * h * k2[1];
        rhs(r + 0.5 * h, t, k3);
        t[0] = y[0] + h * k3[0]; t[1] = y[1] + h * k3[1];
        rhs(r + h, t, k4);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);

        if (record) {
            out.w.push_back(y[0]);
            out.dw.push_back(y[1]);
        }

        if (y[0] <= 0.0) {
            out.shot = Shot::Overshoot;
            out.event_index = i + 1;
            if (!record) return out;
            // keep recording so callers can back off before the event
            for (std::size_t j = i + 1; j < steps; ++j) {
                out.w.push_back(y[0]);
                out.dw.push_back(y[1]);
            }
            return out;
        }
        if (y[1] > turn_tol) {
            out.shot = Shot::Undershoot;
            out.event_index = i + 1;
            if (!record) return out;
            for (std::size_t j = i + 1; j < steps; ++j) {
                out.w.push_back(y[0]);
                out.dw.push_back(y[1]);
            }
            return out;
        }
    }
    // no event by r_max: still positive and decreasing
    out.shot = y[0] > 0.0 ? Shot::Undershoot : Shot::Overshoot;
    return out;
}

void check_admissible(int N, double p) {
    if (N < 1 || N > 3) throw std::invalid_argument("profile dimension N must be 1, 2 or 3");
    if (!(p > 1.0)) throw std::invalid_argument("exponent p must exceed 1");
    if (N >= 3 && !(2.0 * p < 2.0 * N / (N - 2.0)))
        throw std::invalid_argument("exponent p is not subcritical for N = " + std::to_string(N));
}

}  // namespace

GroundStateProfile solve_profile(int N, double p, const ProfileOptions& opt) {
    check_admissible(N, p);
    if (opt.ode_step <= 0.0 || opt.r_max <= 1.0) throw std::invalid_argument("bad ODE grid parameters");

    const double h = opt.ode_step;
    double lo = opt.bracket_lo;
    if (integrate(lo, N, p, h, opt.r_max, false).shot != Shot::Undershoot)
        throw std::runtime_error("shooting bracket not found: lower amplitude does not undershoot");

    double hi = 2.0 * lo;
    int doublings = 0;
    while (integrate(hi, N, p, h, opt.r_max, false).shot != Shot::Overshoot) {
        hi *= 2.0;
        if (++doublings > 30)
            throw std::runtime_error("shooting bracket not found: no crossing amplitude located");
    }

    for (int it = 0; it < opt.max_bisect && (hi - lo) > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (integrate(mid, N, p, h, opt.r_max, false).shot == Shot::Undershoot)
            lo = mid;
        else
            hi = mid;
    }
    const double amp = 0.5 * (lo + hi);

    Integration tr = integrate(amp, N, p, h, opt.r_max, true);
    const auto samples = static_cast<std::size_t>(std::llround(opt.r_max / h)) + 1;

    GroundStateProfile prof;
    prof.dim = N;
    prof.p = p;
    prof.shoot_amplitude = amp;
    prof.r_max = opt.r_max;
    prof.step = h;
    prof.r.resize(samples);
    prof.values.resize(samples);
    prof.derivative_values.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) prof.r[i] = static_cast<double>(i) * h;

    // splice an analytic decay tail where the shot stops tracking the true
    // solution: from the first radius with w < amp*1e-5, or before the event
    std::size_t splice = samples;
    for (std::size_t i = 0; i < std::min(tr.event_index, samples); ++i) {
        if (tr.w[i] < 1e-5 * amp) {
            splice = i;
            break;
        }
    }
    if (splice == samples && tr.event_index < samples) {
        splice = tr.event_index > 64 ? tr.event_index - 64 : 0;
        if (splice == 0) throw std::runtime_error("shooting failed to produce a decaying profile");
    }

    for (std::size_t i = 0; i < std::min(splice, samples); ++i) {
        prof.values[i] = tr.w[i];
        prof.derivative_values[i] = tr.dw[i];
    }
    if (splice < samples) {
        const double r0 = prof.r[splice - 1];
        const double w0 = prof.values[splice - 1];
        const double nu = 0.5 * (N - 1);
        for (std::size_t i = splice; i < samples; ++i) {
            const double r = prof.r[i];
            const double w = w0 * std::pow(r0 / r, nu) * std::exp(-(r - r0));
            prof.values[i] = w;
            prof.derivative_values[i] = -w * (1.0 + nu / r);
        }
    }

    if (prof.values.back() > opt.decay_tol)
        throw std::runtime_error("profile failed the decay tolerance at r_max");

    // 4th-order interior FD residual of the radial ODE
    const double expo = 2.0 * p - 1.0;
    const std::size_t n = samples;
    prof.residual_rms = std::sqrt(num::pairwise_sum(2, n - 2, [&](std::size_t i) {
                            const double wm2 = prof.values[i - 2], wm1 = prof.values[i - 1];
                            const double w0 = prof.values[i];
                            const double wp1 = prof.values[i + 1], wp2 = prof.values[i + 2];
                            const double d2 = (-wp2 + 16.0 * wp1 - 30.0 * w0 + 16.0 * wm1 - wm2) /
                                              (12.0 * h * h);
                            const double d1 = (-wp2 + 8.0 * wp1 - 8.0 * wm1 + wm2) / (12.0 * h);
                            const double res = -d2 - (N - 1) / prof.r[i] * d1 + w0 - nl_power(w0, expo);
                            return res * res;
                        }) /
                        static_cast<double>(n - 4));
    if (prof.residual_rms > 1e-6)
        throw std::runtime_error("profile ODE residual exceeds tolerance");

    return prof;
}

GroundStateProfile solve_profile(int N, double p, double decay_tol, double ode_step) {
    ProfileOptions opt;
    opt.decay_tol = decay_tol;
    opt.ode_step = ode_step;
    return solve_profile(N, p, opt);
}

double GroundStateProfile::value(double radius) const {
    if (radius < 0.0) radius = -radius;  // W is radial
    if (radius >= r_max) {
        const double nu = 0.5 * (dim - 1);
        return values.back() * std::pow(r_max / radius, nu) * std::exp(-(radius - r_max));
    }
    const auto i = static_cast<std::size_t>(radius / step);
    const std::size_t k = std::min(i, values.size() - 2);
    const double t = (radius - r[k]) / step;
    const double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
    const double h10 = t * (1.0 - t) * (1.0 - t);
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return h00 * values[k] + h10 * step * derivative_values[k] + h01 * values[k + 1] +
           h11 * step * derivative_values[k + 1];
}

double GroundStateProfile::deriv(double radius) const {
    const double sign = radius < 0.0 ? -1.0 : 1.0;
    radius = std::abs(radius);
    if (radius >= r_max) {
        const double nu = 0.5 * (dim - 1);
        const double w = values.back() * std::pow(r_max / radius, nu) * std::exp(-(radius - r_max));
        return sign * (-w * (1.0 + nu / radius));
    }
    const auto i = static_cast<std::size_t>(radius / step);
    const std::size_t k = std::min(i, values.size() - 2);
    const double t = (radius - r[k]) / step;
    const double dh00 = 6.0 * t * (t - 1.0);
    const double dh10 = (1.0 - t) * (1.0 - 3.0 * t);
    const double dh01 = -6.0 * t * (t - 1.0);
    const double dh11 = t * (3.0 * t - 2.0);
    return sign * (dh00 * values[k] / step + dh10 * derivative_values[k] + dh01 * values[k + 1] / step +
                   dh11 * derivative_values[k + 1]);
}

namespace {

double surface_constant(int N) {
    switch (N) {
        case 1: return 2.0;
        case 2: return 2.0 * M_PI;
        case 3: return 4.0 * M_PI;
    }
    throw std::invalid_argument("surface constant: N must be 1, 2 or 3");
}

// composite Simpson on the uniform profile grid (sample count is odd when
// r_max/step is even; fall back to a trapezoid for the final interval)
template <class F>
double radial_integral(const GroundStateProfile& prof, F&& f) {
    const std::size_t n = prof.values.size();
    const double h = prof.step;
    const std::size_t pairs = (n - 1) / 2;
    double s = num::pairwise_sum(0, pairs, [&](std::size_t k) {
        const std::size_t i = 2 * k;
        return f(i) + 4.0 * f(i + 1) + f(i + 2);
    }) * (h / 3.0);
    if ((n - 1) % 2 == 1) s += 0.5 * h * (f(n - 2) + f(n - 1));
    return s;
}

}  // namespace

double moment(const GroundStateProfile& profile, double q) {
    if (q < 2.0) throw std::invalid_argument("moment: exponent q must be >= 2");
    const int N = profile.dim;
    const double radial = radial_integral(profile, [&](std::size_t i) {
        const double rN = N == 1 ? 1.0 : std::pow(profile.r[i], N - 1);
        return std::pow(profile.values[i], q) * rN;
    });
    return surface_constant(N) * radial;
}

double gradient_moment(const GroundStateProfile& profile) {
    const int N = profile.dim;
    const double radial = radial_integral(profile, [&](std::size_t i) {
        const double rN = N == 1 ? 1.0 : std::pow(profile.r[i], N - 1);
        return profile.derivative_values[i] * profile.derivative_values[i] * rN;
    });
    return surface_constant(N) * radial;
}

RescaledProfile rescale_profile(std::shared_ptr<const GroundStateProfile> profile, double J1, double J2,
                                std::vector<double> center) {
    if (!profile) throw std::invalid_argument("rescale_profile: null profile");
    if (J1 <= 0.0 || J2 <= 0.0) throw std::domain_error("rescale_profile: potential values must be positive");
    RescaledProfile rp;
    rp.amplitude = std::pow(J1 / J2, 1.0 / (2.0 * profile->p - 2.0));
    rp.width = std::sqrt(J1);
    rp.base = std::move(profile);
    rp.center = std::move(center);
    return rp;
}

LimitEnergy limit_energy(const GroundStateProfile& profile, double J1, double J2) {
    if (J1 <= 0.0 || J2 <= 0.0) throw std::domain_error("limit_energy: potential values must be positive");
    const double p = profile.p;
    const int N = profile.dim;
    const double scaling = std::pow(J1, p / (p - 1.0) - 0.5 * N) * std::pow(J2, -1.0 / (p - 1.0));
    const double m2p = moment(profile, 2.0 * p);

    LimitEnergy e;
    e.nehari_value = (p - 1.0) / (2.0 * p) * scaling * m2p;
    e.half_value = 0.5 * scaling * m2p;

    // F^J(U^Q) by radial quadrature of the rescaled profile
    const double a = std::pow(J1 / J2, 1.0 / (2.0 * p - 2.0));
    const double b = std::sqrt(J1);
    const double grad2 = a * a * std::pow(b, 2.0 - N) * gradient_moment(profile);
    const double mass2 = a * a * std::pow(b, -static_cast<double>(N)) * moment(profile, 2.0);
    const double mass2p = std::pow(a, 2.0 * p) * std::pow(b, -static_cast<double>(N)) * m2p;
    e.direct_quadrature = 0.5 * grad2 + 0.5 * J1 * mass2 - 1.0 / (2.0 * p) * J2 * mass2p;
    return e;
}

std::pair<double, double> c0_candidates(const GroundStateProfile& profile) {
    if (std::abs(profile.p - 2.0) > 1e-12)
        throw std::invalid_argument("c0_candidates requires a p = 2 profile");
    const double m4 = moment(profile, 4.0);
    return {0.5 * m4, 0.25 * m4};
}

void save_table(const GroundStateProfile& profile, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    std::fprintf(f, "# ground-state profile N=%d p=%.17g W0=%.17g step=%.17g rmax=%.17g\n", profile.dim,
                 profile.p, profile.shoot_amplitude, profile.step, profile.r_max);
    for (std::size_t i = 0; i < profile.r.size(); ++i)
        std::fprintf(f, "%.17g %.17g\n", profile.r[i], profile.values[i]);
    std::fclose(f);
}

GroundStateProfile load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    GroundStateProfile prof;
    std::string hash, tag;
    in >> hash >> tag;
    if (hash != "#") throw std::runtime_error("missing profile header in " + path);
    auto read_kv = [&](const char* key) {
        std::string kv;
        in >> kv;
        const auto eq = kv.find('=');
        if (eq == std::string::npos || kv.substr(0, eq) != key)
            throw std::runtime_error("malformed profile header in " + path);
        return std::stod(kv.substr(eq + 1));
    };
    prof.dim = static_cast<int>(read_kv("N"));
    prof.p = read_kv("p");
    prof.shoot_amplitude = read_kv("W0");
    prof.step = read_kv("step");
    prof.r_max = read_kv("rmax");
    double r, w;
    while (in >> r >> w) {
        prof.r.push_back(r);
        prof.values.push_back(w);
    }
    // derivatives rebuilt by centered differences; ends one-sided
    const std::size_t n = prof.values.size();
    if (n < 3) throw std::runtime_error("profile table too short in " + path);
    prof.derivative_values.resize(n);
    prof.derivative_values[0] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        prof.derivative_values[i] = (prof.values[i + 1] - prof.values[i - 1]) / (2.0 * prof.step);
    prof.derivative_values[n - 1] = (prof.values[n - 1] - prof.values[n - 2]) / prof.step;
    return prof;
}

}  // namespace cnls::profile
