#pragma once

#include <cassert>
#include <span>
#include <vector>

namespace spheroid {

/// Thomas algorithm for a tridiagonal system. `lower[i]` multiplies x[i-1]
/// (lower[0] unused), `upper[i]` multiplies x[i+1] (upper[n-1] unused).
/// Requires a diagonally dominant (or otherwise LU-stable) matrix; no pivoting.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
    const std::size_t n = diag.size();
    assert(lower.size() == n && upper.size() == n && rhs.size() == n);
    std::vector<double> c_prime(n), x(n);
    c_prime[0] = upper[0] / diag[0];
    x[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double m = 1.0 / (diag[i] - lower[i] * c_prime[i - 1]);
        c_prime[i] = upper[i] * m;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) * m;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c_prime[i] * x[i + 1];
    return x;
}

} // namespace spheroid
