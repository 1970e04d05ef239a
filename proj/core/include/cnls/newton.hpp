#pragma once

#include <utility>
#include <vector>

#include "cnls/field.hpp"

namespace cnls::driver {

struct NewtonOptions {
    double tol = 2e-3;          // H1 norm of the Riesz gradient (h^2-scale floor)
    int max_iter = 60;
    double tol_linear_floor = 1e-10;
    int max_linear_iter = 4000;
    double collapse_energy_hint = 0.0;  // ansatz energy; 0 disables the monitor
    double collapse_peak_hint = 0.0;    // expected peak height
};

struct SolutionRecord {
    field::FieldPair fields;
    double epsilon = 0.0;
    std::vector<double> Q_eps, Qprime_eps;  // peak locations, original coordinates
    int newton_iters = 0;
    double final_grad_norm = 0.0;
    double min_field_value = 0.0;  // positivity monitor over interior nodes
    double energy = 0.0;
    bool converged = false;
    bool collapsed = false;  // trivial / other-branch escape flag
    bool peaks_valid = false;
};

/// Damped matrix-free Newton on the strong-form residual with MINRES inner
/// solves (Riesz-preconditioned) and Armijo backtracking on |grad|^2.
/// Peak extraction is left to the caller (fields may be inspected first).
SolutionRecord newton_solve(field::FieldPair init, const field::Coefficients& coeffs,
                            const NewtonOptions& opt);

struct PeakError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Argmax per component refined by a per-axis quadratic fit, mapped back to
/// original coordinates (times eps). Throws PeakError on boundary maxima,
/// flat fields, or ambiguous (two equal) maxima.
std::pair<std::vector<double>, std::vector<double>> extract_peaks(const field::FieldPair& fields,
                                                                  double eps);

}  // namespace cnls::driver
