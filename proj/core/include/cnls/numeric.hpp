#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cnls::num {

/// Fixed-topology pairwise reduction; deterministic regardless of chunking
/// done by callers, and more accurate than a running sum.
template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, F&& term) {
    const std::size_t n = hi - lo;
    if (n <= 64) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(lo, mid, term) + pairwise_sum(mid, hi, term);
}

inline double pairwise_sum(std::span<const double> v) {
    return pairwise_sum(0, v.size(), [&](std::size_t i) { return v[i]; });
}

/// Eigenvalues of a small (n<=3) symmetric matrix by cyclic Jacobi rotations.
/// `a` is row-major n*n; returns ascending eigenvalues.
std::vector<double> sym_eigenvalues(std::vector<double> a, int n);

/// Least-squares line fit through (x, y); returns {slope, intercept, slope_half_width}
/// with half width = 2 * stderr of the slope estimate.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double half_width = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace cnls::num
