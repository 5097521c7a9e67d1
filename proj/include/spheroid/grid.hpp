#pragma once

#include <cassert>
#include <span>
#include <vector>

namespace spheroid {

/// Uniform space-time discretization of the fixed domain [0,1] x [0,T].
///
/// Space: n_y equidistant nodes y_j = j*h, h = 1/(n_y-1), including both
/// endpoints. Time: n_t steps of length dt, levels t_i = i*dt, horizon
/// T = n_t*dt exactly.
struct Grid {
    int n_y = 30;
    double dt = 0.01;
    int n_t = 50;

    double h() const { return 1.0 / (n_y - 1); }
    double y(int j) const { return j * h(); }
    double t(int i) const { return i * dt; }
    double T() const { return n_t * dt; }
    int n_levels() const { return n_t + 1; }

    bool valid() const { return n_y >= 3 && dt > 0.0 && n_t >= 1; }
};

/// Nodal values of one field at one time level (length n_y).
using SpaceField = std::vector<double>;

/// One SpaceField per time level, indexed 0..n_t.
using SpaceTimeField = std::vector<SpaceField>;

inline SpaceField make_space_field(const Grid& g, double value = 0.0) {
    return SpaceField(static_cast<std::size_t>(g.n_y), value);
}

inline SpaceTimeField make_space_time_field(const Grid& g, double value = 0.0) {
    return SpaceTimeField(static_cast<std::size_t>(g.n_levels()),
                          make_space_field(g, value));
}

/// Composite trapezoid approximation of the spatial integral over [0,1].
/// Exact for affine integrands.
inline double trapezoid(std::span<const double> f, const Grid& g) {
    assert(static_cast<int>(f.size()) == g.n_y);
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t j = 1; j + 1 < f.size(); ++j) sum += f[j];
    return sum * g.h();
}

/// Composite trapezoid approximation of the time integral over [0,T].
inline double time_trapezoid(std::span<const double> series, const Grid& g) {
    assert(static_cast<int>(series.size()) == g.n_levels());
    double sum = 0.5 * (series.front() + series.back());
    for (std::size_t i = 1; i + 1 < series.size(); ++i) sum += series[i];
    return sum * g.dt;
}

/// Nodal spatial derivative: central differences in the interior,
/// second-order one-sided stencils at both endpoints.
inline SpaceField derivative_y(std::span<const double> f, const Grid& g) {
    const int n = g.n_y;
    const double h = g.h();
    SpaceField d(static_cast<std::size_t>(n));
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    for (int j = 1; j < n - 1; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

} // namespace spheroid
