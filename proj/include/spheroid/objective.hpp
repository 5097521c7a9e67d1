#pragma once

#include <cmath>

#include "spheroid/adjoint.hpp"
#include "spheroid/forward.hpp"
#include "spheroid/grid.hpp"
#include "spheroid/kinetics.hpp"
#include "spheroid/observations.hpp"

namespace spheroid {

/// Derivative of the reduced misfit with respect to (c_c, c_d, sigma).
struct GradientVector {
    double c_c = 0.0, c_d = 0.0, sigma = 0.0;

    std::array<double, 3> as_array() const { return {c_c, c_d, sigma}; }
    double norm() const { return std::sqrt(c_c * c_c + c_d * c_d + sigma * sigma); }
};

/// Misfit functional
/// J = mu1/2 int_0^T int_0^1 (N - N*)^2 dy dt + mu2/2 int_0^T (S - S*)^2 dt,
/// both integrals by composite trapezoid on the solver grid.
inline double eval_J(const StateTrajectory& traj, const Observations& obs) {
    const Grid& g = traj.grid;
    check_shapes(obs, g);
    std::vector<double> density_part(static_cast<std::size_t>(g.n_levels()));
    std::vector<double> radius_part(static_cast<std::size_t>(g.n_levels()));
    SpaceField sq(static_cast<std::size_t>(g.n_y));
    for (int i = 0; i <= g.n_t; ++i) {
        for (int j = 0; j < g.n_y; ++j) {
            const double d = traj.N[i][j] - obs.N_star[i][j];
            sq[j] = d * d;
        }
        density_part[i] = trapezoid(sq, g);
        const double dS = traj.S[i] - obs.S_star[i];
        radius_part[i] = dS * dS;
    }
    return 0.5 * obs.mu1 * time_trapezoid(density_part, g) +
           0.5 * obs.mu2 * time_trapezoid(radius_part, g);
}

/// Reduced gradient from the multiplier fields. The objective has no
/// explicit parameter dependence, so the gradient is the action of the
/// parameter derivative of the constraint on the multipliers:
/// component m = int int [ -l1 N (da/dp_m - N db/dp_m)
///                         - l2 N S db/dp_m - l3 N S^2 dk/dp_m ] dy dt.
inline GradientVector assemble_gradient(const StateTrajectory& traj,
                                        const AdjointTrajectory& adj,
                                        const Parameters& p, const ModelConstants& mc,
                                        const Grid& g) {
    std::array<std::vector<double>, 3> per_level;
    for (auto& v : per_level) v.assign(static_cast<std::size_t>(g.n_levels()), 0.0);
    std::array<SpaceField, 3> integrand;
    for (auto& f : integrand) f.resize(static_cast<std::size_t>(g.n_y));

    for (int i = 0; i <= g.n_t; ++i) {
        const double S = traj.S[i], S2 = S * S;
        for (int j = 0; j < g.n_y; ++j) {
            const double N = traj.N[i][j];
            const auto jac = rates_dp(traj.C[i][j], p, mc);
            for (int m = 0; m < 3; ++m) {
                integrand[m][j] = -adj.l1[i][j] * N * (jac.da[m] - N * jac.db[m]) -
                                  adj.l2[i][j] * N * S * jac.db[m] -
                                  adj.l3[i][j] * N * S2 * jac.dk[m];
            }
        }
        for (int m = 0; m < 3; ++m) per_level[m][i] = trapezoid(integrand[m], g);
    }
    return {time_trapezoid(per_level[0], g), time_trapezoid(per_level[1], g),
            time_trapezoid(per_level[2], g)};
}

struct ObjectiveResult {
    double J = 0.0;
    GradientVector gradient;
};

/// Value and gradient of the reduced misfit at p: one forward solve, one
/// adjoint solve, one assembly.
inline ObjectiveResult reduced_objective(const Parameters& p, const InitialCondition& ic,
                                         const Observations& obs, const Grid& g,
                                         const ModelConstants& mc,
                                         const SolverConfig& cfg = {},
                                         const ShootingConfig& sc = {}) {
    const StateTrajectory traj = solve_forward(p, ic, g, mc, cfg);
    const AdjointTrajectory adj = solve_adjoint(traj, obs, p, mc, g, sc);
    return {eval_J(traj, obs), assemble_gradient(traj, adj, p, mc, g)};
}

} // namespace spheroid
