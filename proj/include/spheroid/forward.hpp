#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "spheroid/errors.hpp"
#include "spheroid/grid.hpp"
#include "spheroid/kinetics.hpp"
#include "spheroid/tridiagonal.hpp"

namespace spheroid {

/// Tolerances and iteration caps shared by the forward solver.
struct SolverConfig {
    double bvp_tol = 1e-10;      ///< max-norm tolerance of the nutrient Newton iteration
    int max_bvp_iter = 100;      ///< cap on nutrient BVP iterations
    double residual_tol = 1e-6;  ///< bound asserted by the residual audit
    double max_seed_time = 50.0; ///< time budget for grow_from_seed
};

/// Initial state of the free-boundary march: live-cell profile and radius.
struct InitialCondition {
    SpaceField N0;
    double S0 = 1.0;
};

/// Full solution of the direct problem on the fixed domain.
///
/// N, C, V are nodal fields per time level; S is the radius series and
/// S_prime its one-sided slope, S_prime[i] = V(1, t_i), so that
/// S[i+1] = S[i] + dt * S_prime[i] holds exactly.
struct StateTrajectory {
    SpaceTimeField N, C, V;
    std::vector<double> S, S_prime;
    Grid grid;
};

/// Quasisteady nutrient profile for one time level.
///
/// Solves C_yy + (2/y) C_y = k(C) S^2 N on (0,1) with C_y(0)=0 and C(1)=1
/// by Newton iteration on the second-order finite-difference stencil
/// (tridiagonal Jacobian). The origin row uses the symmetry limit
/// C_yy + (2/y) C_y -> 3 C_yy, i.e. 6 (C_1 - C_0)/h^2 = k(C_0) S^2 N_0.
///
/// The discrete problem is an M-matrix system, so the solution satisfies
/// 0 <= C <= 1 with C(1) = 1 exactly and C nondecreasing in y.
inline SpaceField solve_nutrient(const SpaceField& N_slice, double S,
                                 const Parameters& p, const ModelConstants& mc,
                                 const SolverConfig& cfg, const Grid& g,
                                 const SpaceField* warm_start = nullptr) {
    const int n = g.n_y;
    const double h = g.h();
    const double h2 = h * h;
    const double S2 = S * S;

    SpaceField C = warm_start ? *warm_start : make_space_field(g, 1.0);
    C[n - 1] = 1.0;

    std::vector<double> lower(n), diag(n), upper(n), rhs(n);
    double max_residual = 0.0;

    for (int iter = 0; iter < cfg.max_bvp_iter; ++iter) {
        // Residual F(C) and tridiagonal Jacobian rows.
        max_residual = 0.0;
        lower[0] = 0.0;
        {
            const double src = rate_k(C[0], p, mc) * S2 * N_slice[0];
            const double dsrc = mc.beta_hat_a * p.c_c / ((p.c_c + C[0]) * (p.c_c + C[0])) * S2 * N_slice[0];
            rhs[0] = -(6.0 * (C[1] - C[0]) / h2 - src);
            diag[0] = -6.0 / h2 - dsrc;
            upper[0] = 6.0 / h2;
            max_residual = std::abs(rhs[0]) * h2; // scale like the PDE row
        }
        for (int j = 1; j < n - 1; ++j) {
            const double yj = g.y(j);
            const double src = rate_k(C[j], p, mc) * S2 * N_slice[j];
            const double dsrc = mc.beta_hat_a * p.c_c / ((p.c_c + C[j]) * (p.c_c + C[j])) * S2 * N_slice[j];
            const double lap = (C[j + 1] - 2.0 * C[j] + C[j - 1]) / h2 +
                               (C[j + 1] - C[j - 1]) / (yj * h);
            rhs[j] = -(lap - src);
            lower[j] = 1.0 / h2 - 1.0 / (yj * h);
            diag[j] = -2.0 / h2 - dsrc;
            upper[j] = 1.0 / h2 + 1.0 / (yj * h);
            max_residual = std::max(max_residual, std::abs(rhs[j]) * h2);
        }
        lower[n - 1] = 0.0;
        diag[n - 1] = 1.0;
        upper[n - 1] = 0.0;
        rhs[n - 1] = 1.0 - C[n - 1];

        const auto delta = solve_tridiagonal(lower, diag, upper, rhs);
        double max_delta = 0.0;
        for (int j = 0; j < n; ++j) {
            C[j] = std::clamp(C[j] + delta[j], 0.0, 1.0);
            max_delta = std::max(max_delta, std::abs(delta[j]));
        }
        if (max_delta < cfg.bvp_tol) return C;
    }
    throw convergence_error("nutrient BVP: Newton iteration did not converge within " +
                                std::to_string(cfg.max_bvp_iter) +
                                " iterations (last scaled residual " +
                                std::to_string(max_residual) + ")",
                            max_residual, cfg.max_bvp_iter);
}

/// Velocity slice from the source balance V_y + (2/y) V = b(C) N S, V(0)=0.
///
/// Uses the integrating-factor identity (y^2 V)' = y^2 b N S and integrates
/// the moment exactly against the piecewise-linear nodal source, so constant
/// and linear sources are reproduced to roundoff.
inline SpaceField solve_velocity(const SpaceField& N_slice, const SpaceField& C_slice,
                                 double S, const Parameters& p, const ModelConstants& mc,
                                 const Grid& g) {
    const int n = g.n_y;
    const double h = g.h();
    SpaceField V(static_cast<std::size_t>(n), 0.0);
    double moment = 0.0; // integral of s^2 * source over [0, y_j]
    double g_prev = rate_b(C_slice[0], p, mc) * N_slice[0] * S;
    for (int j = 1; j < n; ++j) {
        const double g_cur = rate_b(C_slice[j], p, mc) * N_slice[j] * S;
        const double y0 = g.y(j - 1), y1 = g.y(j);
        const double i1 = (y1 * y1 * y1 - y0 * y0 * y0) / 3.0;
        const double i2 = (y1 * y1 * y1 * y1 - y0 * y0 * y0 * y0) / 4.0 - y0 * i1;
        moment += g_prev * i1 + (g_cur - g_prev) / h * i2;
        V[j] = moment / (y1 * y1);
        g_prev = g_cur;
    }
    return V;
}

namespace detail {

/// Relative advection speed w = (V - y S') / S; vanishes at both ends
/// because V(0)=0 and S' = V(1).
inline double advection_speed(double V, double y, double S, double S_prime) {
    return (V - y * S_prime) / S;
}

inline void check_cfl(double max_speed, double dt, double h, const char* where) {
    const double courant = max_speed * dt / h;
    if (courant > 1.0 + 1e-12)
        throw cfl_error(std::string(where) + ": Courant number " +
                            std::to_string(courant) + " exceeds 1",
                        courant);
}

} // namespace detail

/// One explicit step of the live-cell equation
/// N_t - (S'/S) y N_y + (V/S) N_y = N [a(C) - b(C) N],
/// first-order upwind in the advection term, explicit logistic reaction.
inline SpaceField step_density(const SpaceField& N_slice, const SpaceField& C_slice,
                               const SpaceField& V_slice, double S, double S_prime,
                               const Parameters& p, const ModelConstants& mc,
                               const Grid& g) {
    const int n = g.n_y;
    const double h = g.h();
    const double dt = g.dt;

    double max_speed = 0.0;
    for (int j = 0; j < n; ++j)
        max_speed = std::max(max_speed,
                             std::abs(detail::advection_speed(V_slice[j], g.y(j), S, S_prime)));
    detail::check_cfl(max_speed, dt, h, "density step");

    SpaceField next(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double w = detail::advection_speed(V_slice[j], g.y(j), S, S_prime);
        double advect = 0.0;
        if (w > 0.0 && j > 0)
            advect = w * (N_slice[j] - N_slice[j - 1]) / h;
        else if (w < 0.0 && j < n - 1)
            advect = w * (N_slice[j + 1] - N_slice[j]) / h;
        const auto r = rates(C_slice[j], p, mc);
        next[j] = N_slice[j] - dt * advect +
                  dt * N_slice[j] * (r.a - r.b * N_slice[j]);
    }
    return next;
}

/// Forward Euler update of the radius, S' = V(1,t).
inline double step_radius(double S, double V_boundary, double dt) {
    const double S_new = S + dt * V_boundary;
    if (!(S_new > 0.0))
        throw solver_error("radius step: tumour collapsed to nonpositive radius " +
                           std::to_string(S_new));
    return S_new;
}

/// Solve the direct problem on [0,T]: per level, nutrient BVP -> velocity
/// quadrature -> explicit density/radius advance.
inline StateTrajectory solve_forward(const Parameters& p, const InitialCondition& ic,
                                     const Grid& g, const ModelConstants& mc,
                                     const SolverConfig& cfg = {}) {
    if (static_cast<int>(ic.N0.size()) != g.n_y)
        throw solver_error("forward solve: initial profile length does not match grid");
    StateTrajectory traj;
    traj.grid = g;
    traj.N.resize(g.n_levels());
    traj.C.resize(g.n_levels());
    traj.V.resize(g.n_levels());
    traj.S.resize(g.n_levels());
    traj.S_prime.resize(g.n_levels());

    traj.N[0] = ic.N0;
    traj.S[0] = ic.S0;
    for (int i = 0; i <= g.n_t; ++i) {
        // volume-fraction check: report rather than silently clamp
        for (int j = 0; j < g.n_y; ++j)
            if (traj.N[i][j] < -1e-9 || traj.N[i][j] > 1.0 + 1e-9)
                throw solver_error("forward solve: N = " +
                                   std::to_string(traj.N[i][j]) + " at node " +
                                   std::to_string(j) + ", level " +
                                   std::to_string(i) + " leaves [0, 1]");
        const SpaceField* warm = i > 0 ? &traj.C[i - 1] : nullptr;
        traj.C[i] = solve_nutrient(traj.N[i], traj.S[i], p, mc, cfg, g, warm);
        traj.V[i] = solve_velocity(traj.N[i], traj.C[i], traj.S[i], p, mc, g);
        traj.S_prime[i] = traj.V[i].back();
        if (i < g.n_t) {
            traj.N[i + 1] = step_density(traj.N[i], traj.C[i], traj.V[i],
                                         traj.S[i], traj.S_prime[i], p, mc, g);
            traj.S[i + 1] = step_radius(traj.S[i], traj.V[i].back(), g.dt);
        }
    }
    return traj;
}

/// Integrate the model from a single live cell (N == 1, S = 1) until the
/// radius reaches target_S; the final (N, S) pair seeds the inversion runs.
inline InitialCondition grow_from_seed(const Parameters& p, const ModelConstants& mc,
                                       const SolverConfig& cfg, double target_S,
                                       const Grid& g) {
    InitialCondition state{make_space_field(g, 1.0), 1.0};
    if (target_S <= state.S0) return state;

    const long max_steps = static_cast<long>(std::ceil(cfg.max_seed_time / g.dt));
    SpaceField C = make_space_field(g, 1.0);
    for (long step = 0; step < max_steps; ++step) {
        C = solve_nutrient(state.N0, state.S0, p, mc, cfg, g, &C);
        const SpaceField V = solve_velocity(state.N0, C, state.S0, p, mc, g);
        state.N0 = step_density(state.N0, C, V, state.S0, V.back(), p, mc, g);
        state.S0 = step_radius(state.S0, V.back(), g.dt);
        if (state.S0 >= target_S) return state;
    }
    throw solver_error("grow_from_seed: radius " + std::to_string(state.S0) +
                       " did not reach target " + std::to_string(target_S) +
                       " within the time budget " + std::to_string(cfg.max_seed_time));
}

} // namespace spheroid
