#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "spheroid/errors.hpp"
#include "spheroid/forward.hpp"
#include "spheroid/grid.hpp"
#include "spheroid/kinetics.hpp"
#include "spheroid/observations.hpp"

// Mutation seam for the gradient oracle: compiling a translation unit with
// this macro set to -1.0 flips the l2 coupling term in the l1 update, which
// the finite-difference gradient check must detect.
#ifndef SPHEROID_LAMBDA2_COUPLING_SIGN
#define SPHEROID_LAMBDA2_COUPLING_SIGN 1.0
#endif

namespace spheroid {

/// Multipliers of the constrained problem. l1..l3 live on the space-time
/// grid, l4..l7 are time series, l8 is a spatial profile, l9 a scalar.
struct AdjointTrajectory {
    SpaceTimeField l1, l2, l3;
    std::vector<double> l4, l5, l6, l7;
    SpaceField l8;
    double l9 = 0.0;
};

/// Controls of the per-level shooting solve for l3 and of the singular-origin
/// treatment shared with the l2 integration.
struct ShootingConfig {
    double epsilon = 0.0;     ///< origin cutoff; <= 0 selects h/2
    double root_tol = 1e-12;  ///< relative tolerance on the shooting residual
    double bracket_lo = -1.0; ///< initial root bracket for the boundary slope
    double bracket_hi = 1.0;
    int max_root_iter = 60;
};

/// State slices of one time level, plus the radius and its slope.
struct LevelView {
    std::span<const double> N, C, V;
    double S = 1.0;
    double S_prime = 0.0;
};

inline LevelView level_view(const StateTrajectory& traj, int i) {
    return {traj.N[i], traj.C[i], traj.V[i], traj.S[i], traj.S_prime[i]};
}

namespace detail {

/// Nodal derivative of N taken with the same upwind orientation the forward
/// advection stencil uses (direction by the sign of the relative speed w);
/// central where the advection vanishes. The multiplier equations pair this
/// derivative with the advection sensitivities, so the orientation must
/// match the forward scheme.
inline SpaceField upwind_N_y(const LevelView& view, const Grid& g) {
    const int n = g.n_y;
    const double h = g.h();
    SpaceField d(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double w = advection_speed(view.V[j], g.y(j), view.S, view.S_prime);
        if (w > 0.0 && j > 0)
            d[j] = (view.N[j] - view.N[j - 1]) / h;
        else if (w < 0.0 && j < n - 1)
            d[j] = (view.N[j + 1] - view.N[j]) / h;
        else if (j == 0)
            d[j] = (-3.0 * view.N[0] + 4.0 * view.N[1] - view.N[2]) / (2.0 * h);
        else if (j == n - 1)
            d[j] = (3.0 * view.N[n - 1] - 4.0 * view.N[n - 2] + view.N[n - 3]) / (2.0 * h);
        else
            d[j] = (view.N[j + 1] - view.N[j - 1]) / (2.0 * h);
    }
    return d;
}

inline double shooting_epsilon(const ShootingConfig& sc, const Grid& g) {
    const double eps = sc.epsilon > 0.0 ? sc.epsilon : 0.5 * g.h();
    if (eps >= 3.0 * g.h())
        throw solver_error("shooting: origin cutoff must be below three grid spacings");
    return eps;
}

/// Index of the smallest grid node >= the origin cutoff (at least 1).
inline int cutoff_node(const ShootingConfig& sc, const Grid& g) {
    const double eps = shooting_epsilon(sc, g);
    return std::max(1, static_cast<int>(std::ceil(eps / g.h() - 1e-12)));
}

/// Piecewise-linear evaluation of a nodal field at an off-grid point in
/// [0, h * j_max]; used by the sub-grid integration toward the origin cutoff.
inline double interp(std::span<const double> f, double y, const Grid& g) {
    const double h = g.h();
    int j = static_cast<int>(y / h);
    j = std::clamp(j, 0, g.n_y - 2);
    const double frac = y / h - j;
    return f[j] + frac * (f[j + 1] - f[j]);
}

} // namespace detail

/// Integrate the l2 equation l2_y = (2/y) l2 + (N_y/S) l1 downward from
/// y = 1 with l2(1) = -l4(t), fourth-order one-step method on the grid
/// nodes; below the origin cutoff the solution is extended by a first-order
/// Taylor step. The stored boundary value is exactly -l4(t).
inline SpaceField solve_lambda2_ode(std::span<const double> l1_slice,
                                    const LevelView& view, double l4_t,
                                    const Grid& g, const ShootingConfig& sc = {}) {
    const int n = g.n_y;
    const double h = g.h();
    const int j_cut = detail::cutoff_node(sc, g);

    SpaceField N_y = detail::upwind_N_y(view, g);
    SpaceField forcing(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) forcing[j] = N_y[j] * l1_slice[j] / view.S;

    SpaceField l2(static_cast<std::size_t>(n), 0.0);
    l2[n - 1] = -l4_t;
    auto rhs = [](double y, double value, double force) {
        return 2.0 / y * value + force;
    };
    auto rk4_step = [&](double y_hi, double step, double v) {
        const double y_mid = y_hi - 0.5 * step, y_lo = y_hi - step;
        const double f_hi = detail::interp(forcing, y_hi, g);
        const double f_mid = detail::interp(forcing, y_mid, g);
        const double f_lo = detail::interp(forcing, y_lo, g);
        const double k1 = rhs(y_hi, v, f_hi);
        const double k2 = rhs(y_mid, v - 0.5 * step * k1, f_mid);
        const double k3 = rhs(y_mid, v - 0.5 * step * k2, f_mid);
        const double k4 = rhs(y_lo, v - step * k3, f_lo);
        return v - step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    };
    for (int j = n - 1; j > j_cut; --j) l2[j - 1] = rk4_step(g.y(j), h, l2[j]);

    // Continue below the last node to the cutoff, then extend by a
    // first-order Taylor step about the cutoff.
    const double eps = detail::shooting_epsilon(sc, g);
    double y_cur = g.y(j_cut);
    double val = l2[j_cut];
    if (eps < y_cur - 1e-15) {
        const int n_sub =
            std::max(1, static_cast<int>(std::ceil((y_cur - eps) / (0.5 * h) - 1e-12)));
        const double step = (y_cur - eps) / n_sub;
        for (int s = 0; s < n_sub; ++s) {
            val = rk4_step(y_cur, step, val);
            y_cur -= step;
        }
    }
    const double slope = rhs(eps, val, detail::interp(forcing, eps, g));
    for (int j = j_cut - 1; j >= 0; --j) l2[j] = val + (g.y(j) - eps) * slope;
    return l2;
}

/// One shooting pass for the l3 boundary value problem: integrate
///   u' = v,
///   v' = (2/y) v - (2/y^2 - dk/dC N S^2) u + N (da/dC - db/dC N) l1 + N S db/dC l2
/// from y = 1 with u(1) = 0, v(1) = q down to the origin cutoff, then extend
/// to y = 0 by first-order Taylor steps. Returns the nodal (u, v); the
/// shooting residual is v at y = 0.
inline std::pair<SpaceField, SpaceField> lambda3_shoot(
    double q, std::span<const double> l1_slice, std::span<const double> l2_slice,
    const LevelView& view, const Parameters& p, const ModelConstants& mc,
    const Grid& g, const ShootingConfig& sc = {}) {
    const int n = g.n_y;
    const double h = g.h();
    const double S2 = view.S * view.S;
    const int j_cut = detail::cutoff_node(sc, g);

    // Coefficient and forcing evaluation at arbitrary y: state slices are
    // interpolated linearly and the rate derivatives applied afterwards, so
    // sharp kinetic profiles (half-saturations below the nutrient range) are
    // tracked between nodes.
    auto pot_at = [&](double y) {
        const double C = detail::interp(view.C, y, g);
        const double N = detail::interp(view.N, y, g);
        return rates_dC(C, p, mc).dk_dC * N * S2;
    };
    auto force_at = [&](double y) {
        const double C = detail::interp(view.C, y, g);
        const double N = detail::interp(view.N, y, g);
        const double l1 = detail::interp(l1_slice, y, g);
        const double l2 = detail::interp(l2_slice, y, g);
        const auto sl = rates_dC(C, p, mc);
        return N * (sl.da_dC - sl.db_dC * N) * l1 + N * view.S * sl.db_dC * l2;
    };

    SpaceField u(static_cast<std::size_t>(n), 0.0), v(static_cast<std::size_t>(n), 0.0);
    u[n - 1] = 0.0;
    v[n - 1] = q;
    auto rhs_v = [](double y, double uu, double vv, double pot_y, double force_y) {
        return 2.0 / y * vv - (2.0 / (y * y) - pot_y) * uu + force_y;
    };
    auto rk4_step = [&](double y_hi, double step, double& uu, double& vv) {
        const double y_mid = y_hi - 0.5 * step, y_lo = y_hi - step;
        const double p_hi = pot_at(y_hi);
        const double p_mid = pot_at(y_mid);
        const double p_lo = pot_at(y_lo);
        const double f_hi = force_at(y_hi);
        const double f_mid = force_at(y_mid);
        const double f_lo = force_at(y_lo);
        const double ku1 = vv;
        const double kv1 = rhs_v(y_hi, uu, vv, p_hi, f_hi);
        const double ku2 = vv - 0.5 * step * kv1;
        const double kv2 = rhs_v(y_mid, uu - 0.5 * step * ku1, ku2, p_mid, f_mid);
        const double ku3 = vv - 0.5 * step * kv2;
        const double kv3 = rhs_v(y_mid, uu - 0.5 * step * ku2, ku3, p_mid, f_mid);
        const double ku4 = vv - step * kv3;
        const double kv4 = rhs_v(y_lo, uu - step * ku3, ku4, p_lo, f_lo);
        uu -= step / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4);
        vv -= step / 6.0 * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
    };
    for (int j = n - 1; j > j_cut; --j) {
        double uu = u[j], vv = v[j];
        rk4_step(g.y(j), h, uu, vv);
        u[j - 1] = uu;
        v[j - 1] = vv;
    }

    const double eps = detail::shooting_epsilon(sc, g);
    double y_cur = g.y(j_cut);
    double u_eps = u[j_cut], v_eps = v[j_cut];
    if (eps < y_cur - 1e-15) {
        const int n_sub =
            std::max(1, static_cast<int>(std::ceil((y_cur - eps) / (0.5 * h) - 1e-12)));
        const double step = (y_cur - eps) / n_sub;
        for (int s = 0; s < n_sub; ++s) {
            rk4_step(y_cur, step, u_eps, v_eps);
            y_cur -= step;
        }
    }
    const double du = v_eps;
    const double dv = rhs_v(eps, u_eps, v_eps, pot_at(eps), force_at(eps));
    for (int j = j_cut - 1; j >= 0; --j) {
        u[j] = u_eps + (g.y(j) - eps) * du;
        v[j] = v_eps + (g.y(j) - eps) * dv;
    }
    return {std::move(u), std::move(v)};
}

/// Solve the l3 boundary value problem at one time level by shooting on the
/// boundary slope q = l3_y(1): bracket a sign change of F(q) = v_q(0)
/// (expanding the bracket when needed), then locate the root with a
/// bisection-safeguarded secant. The system is linear in (u, v), so F is
/// affine in q and the secant lands the root immediately.
inline SpaceField solve_lambda3_bvp(std::span<const double> l1_slice,
                                    std::span<const double> l2_slice,
                                    const LevelView& view, const Parameters& p,
                                    const ModelConstants& mc, const Grid& g,
                                    const ShootingConfig& sc = {},
                                    SpaceField* derivative_out = nullptr) {
    auto shoot = [&](double q) {
        return lambda3_shoot(q, l1_slice, l2_slice, view, p, mc, g, sc);
    };
    auto residual = [&](double q) { return shoot(q).second[0]; };
    auto finish = [&](double q) {
        auto [u, v] = shoot(q);
        if (derivative_out) *derivative_out = std::move(v);
        return std::move(u);
    };

    const double f_zero = residual(0.0);
    if (f_zero == 0.0) return finish(0.0);

    double qa = sc.bracket_lo, qb = sc.bracket_hi;
    double fa = residual(qa), fb = residual(qb);
    for (int expand = 0; fa * fb > 0.0; ++expand) {
        if (expand >= 40)
            throw root_find_error("l3 shooting: failed to bracket a root after 40 expansions");
        const double mid = 0.5 * (qa + qb), half = 0.5 * (qb - qa);
        qa = mid - 2.0 * half;
        qb = mid + 2.0 * half;
        fa = residual(qa);
        fb = residual(qb);
    }
    const double f_scale = std::max({std::abs(fa), std::abs(fb), std::abs(f_zero)});

    double q_best = std::abs(fa) < std::abs(fb) ? qa : qb;
    double f_best = std::abs(fa) < std::abs(fb) ? fa : fb;
    for (int iter = 0; iter < sc.max_root_iter; ++iter) {
        if (std::abs(f_best) <= sc.root_tol * f_scale) break;
        double q_next;
        if (fb != fa) {
            q_next = qb - fb * (qb - qa) / (fb - fa);
            if (!(q_next > std::min(qa, qb) && q_next < std::max(qa, qb)))
                q_next = 0.5 * (qa + qb);
        } else {
            q_next = 0.5 * (qa + qb);
        }
        const double f_next = residual(q_next);
        if (std::abs(f_next) < std::abs(f_best)) {
            q_best = q_next;
            f_best = f_next;
        }
        if (fa * f_next <= 0.0) {
            qb = q_next;
            fb = f_next;
        } else {
            qa = q_next;
            fa = f_next;
        }
        if (std::abs(qb - qa) < 1e-300) break;
    }
    if (std::abs(f_best) > sc.root_tol * f_scale * 16.0)
        throw root_find_error("l3 shooting: residual " + std::to_string(f_best) +
                              " did not reach tolerance");
    return finish(q_best);
}

namespace detail {

/// Right-hand side of the l1 equation at one level, i.e. -l1_t expressed
/// through the multipliers and data of that level:
///   (w l1)_y + (a - 2 b N) l1 + b S l2 + k S^2 l3 + mu1 (N* - N),
/// with w = (V - y S')/S. The advection term is kept in conservative form
/// (-w l1_y - w_y l1 combined), discretized with the upwind bias mirroring
/// the forward stencil and carrying the trapezoid weights so the data term
/// and the gradient quadrature stay consistent.
inline SpaceField lambda1_rate(std::span<const double> l1_slice, const LevelView& view,
                               std::span<const double> l2_slice,
                               std::span<const double> l3_slice,
                               std::span<const double> data_slice,
                               const Parameters& p, const ModelConstants& mc,
                               const Grid& g) {
    const int n = g.n_y;
    const double h = g.h();
    const double S = view.S, S2 = S * S;
    constexpr double l2_sign = SPHEROID_LAMBDA2_COUPLING_SIGN;

    double max_speed = 0.0;
    for (int j = 0; j < n; ++j)
        max_speed = std::max(max_speed, std::abs(advection_speed(view.V[j], g.y(j), S,
                                                                 view.S_prime)));
    check_cfl(max_speed, g.dt, h, "l1 backward step");

    auto speed = [&](int j) {
        return advection_speed(view.V[j], g.y(j), S, view.S_prime);
    };
    auto weight = [&](int j) { return (j == 0 || j == n - 1) ? 0.5 : 1.0; };

    SpaceField rate(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double incoming = 0.0;
        if (j < n - 1 && speed(j + 1) > 0.0)
            incoming += speed(j + 1) * weight(j + 1) * l1_slice[j + 1];
        if (j > 0 && speed(j - 1) < 0.0)
            incoming -= speed(j - 1) * weight(j - 1) * l1_slice[j - 1];
        const double advect =
            (incoming - std::abs(speed(j)) * weight(j) * l1_slice[j]) / (weight(j) * h);
        const auto r = rates(view.C[j], p, mc);
        const double growth = r.a - 2.0 * r.b * view.N[j];
        rate[j] = advect + growth * l1_slice[j] + l2_sign * r.b * S * l2_slice[j] +
                  r.k * S2 * l3_slice[j] + data_slice[j];
    }
    return rate;
}

} // namespace detail

/// Backward-difference step of the l1 equation from level t to t - dt:
/// l1(t-dt) = l1(t) + dt [ (w l1)_y + (a - 2 b N) l1 + b S l2 + k S^2 l3
///                          + mu1 (N* - N) ],  w = (V - y S')/S,
/// everything evaluated at level t. The reversed-time march makes the
/// mirrored upwind orientation of lambda1_rate the stable one.
inline SpaceField step_lambda1_backward(std::span<const double> l1_slice,
                                        const LevelView& view,
                                        std::span<const double> l2_slice,
                                        std::span<const double> l3_slice,
                                        std::span<const double> N_star_slice,
                                        double mu1, const Parameters& p,
                                        const ModelConstants& mc, const Grid& g) {
    SpaceField data(static_cast<std::size_t>(g.n_y));
    for (int j = 0; j < g.n_y; ++j)
        data[j] = mu1 * (N_star_slice[j] - view.N[j]);
    const SpaceField rate =
        detail::lambda1_rate(l1_slice, view, l2_slice, l3_slice, data, p, mc, g);
    SpaceField out(static_cast<std::size_t>(g.n_y));
    for (int j = 0; j < g.n_y; ++j) out[j] = l1_slice[j] + g.dt * rate[j];
    return out;
}

/// Backward Euler step of the scalar l4 equation:
/// l4(t-dt) = l4(t) - dt l4_t(t), with
/// l4_t(t) = int_0^1 [ N_y V / S^2 l1 - (y/S) d/dt(N_y l1)
///                     + b N l2 + 2 k N S l3 ] dy + mu2 (S* - S),
/// the time derivative of N_y l1 discretized by the backward difference
/// between levels t and t - dt (l1 at t - dt must already be known).
inline double step_lambda4_backward(double l4_t, const LevelView& view,
                                    const LevelView& view_prev,
                                    std::span<const double> l1_slice,
                                    std::span<const double> l1_prev_slice,
                                    std::span<const double> l2_slice,
                                    std::span<const double> l3_slice,
                                    double radius_misfit, const Parameters& p,
                                    const ModelConstants& mc, const Grid& g) {
    const int n = g.n_y;
    const double dt = g.dt;
    const double S = view.S, S2 = S * S;

    const SpaceField N_y = detail::upwind_N_y(view, g);
    const SpaceField N_y_prev = detail::upwind_N_y(view_prev, g);
    SpaceField integrand(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const auto r = rates(view.C[j], p, mc);
        const double product_rate =
            (N_y[j] * l1_slice[j] - N_y_prev[j] * l1_prev_slice[j]) / dt;
        integrand[j] = N_y[j] * view.V[j] / S2 * l1_slice[j] -
                       g.y(j) / S * product_rate + r.b * view.N[j] * l2_slice[j] +
                       2.0 * r.k * view.N[j] * S * l3_slice[j];
    }
    const double l4_rate = trapezoid(integrand, g) + radius_misfit;
    return l4_t - dt * l4_rate;
}

/// Convenience overload taking the observation and weight directly.
inline double step_lambda4_backward(double l4_t, const LevelView& view,
                                    const LevelView& view_prev,
                                    std::span<const double> l1_slice,
                                    std::span<const double> l1_prev_slice,
                                    std::span<const double> l2_slice,
                                    std::span<const double> l3_slice,
                                    double S_star_t, double mu2, const Parameters& p,
                                    const ModelConstants& mc, const Grid& g) {
    return step_lambda4_backward(l4_t, view, view_prev, l1_slice, l1_prev_slice,
                                 l2_slice, l3_slice, mu2 * (S_star_t - view.S), p, mc,
                                 g);
}

/// Terminal multipliers at t = T: l1, l2 and l4 vanish identically, and the
/// l3 problem is homogeneous there, so its solve returns zero as well.
struct TerminalSlice {
    SpaceField l1, l2, l3;
    double l4 = 0.0;
};

inline TerminalSlice terminal_slice(const StateTrajectory& traj, const Parameters& p,
                                    const ModelConstants& mc, const Grid& g,
                                    const ShootingConfig& sc = {}) {
    TerminalSlice out;
    out.l1 = make_space_field(g, 0.0);
    out.l2 = make_space_field(g, 0.0);
    out.l4 = 0.0;
    out.l3 = solve_lambda3_bvp(out.l1, out.l2, level_view(traj, g.n_t), p, mc, g, sc);
    return out;
}

/// Closed-form value of l4 at level i, used as a cross-check of the stepped
/// recursion: a double integral over [t_i, T] x [0, 1] plus a boundary term
/// at t_i. The N_t - N(a - bN) combination is eliminated through the state
/// equation, leaving N_y (S' y - V)/S.
inline double lambda4_explicit(const StateTrajectory& traj,
                               const SpaceTimeField& l1, const SpaceTimeField& l2,
                               const SpaceTimeField& l3, const Observations& obs,
                               const Parameters& p, const ModelConstants& mc,
                               const Grid& g, int level) {
    const int n = g.n_y;
    std::vector<double> inner(static_cast<std::size_t>(g.n_t - level + 1));
    for (int m = level; m <= g.n_t; ++m) {
        const LevelView view = level_view(traj, m);
        const SpaceField N_y = detail::upwind_N_y(view, g);
        SpaceField f(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            const auto r = rates(view.C[j], p, mc);
            const double transport =
                N_y[j] * (view.S_prime * g.y(j) - view.V[j]) / view.S;
            f[j] = transport * l1[m][j] / view.S - r.b * view.N[j] * l2[m][j] -
                   2.0 * r.k * view.N[j] * view.S * l3[m][j];
        }
        inner[m - level] = trapezoid(f, g) + obs.mu2 * (view.S - obs.S_star[m]);
    }
    double time_integral = 0.0;
    if (inner.size() > 1) {
        time_integral = 0.5 * (inner.front() + inner.back());
        for (std::size_t m = 1; m + 1 < inner.size(); ++m) time_integral += inner[m];
        time_integral *= g.dt;
    }

    const LevelView view = level_view(traj, level);
    const SpaceField N_y = detail::upwind_N_y(view, g);
    SpaceField boundary(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        boundary[j] = g.y(j) * N_y[j] * l1[level][j] / view.S;
    return time_integral - trapezoid(boundary, g);
}

/// Evaluate the dependent multipliers from the computed l1..l4:
/// l5(t) = l2(0,t), l6(t) = l3_y(1,t) - 2 l3(1,t), l7(t) = 3 l3(0,t),
/// l8(y) = l1(y,0), l9 = -int_0^1 y N_y(y,0) l1(y,0)/S(0) dy - l4(0).
inline void auxiliary_multipliers(AdjointTrajectory& adj, const StateTrajectory& traj,
                                  const Grid& g) {
    const int n = g.n_y;
    adj.l5.resize(g.n_levels());
    adj.l6.resize(g.n_levels());
    adj.l7.resize(g.n_levels());
    for (int i = 0; i <= g.n_t; ++i) {
        adj.l5[i] = adj.l2[i][0];
        const SpaceField l3_y = derivative_y(adj.l3[i], g);
        adj.l6[i] = l3_y[n - 1] - 2.0 * adj.l3[i][n - 1];
        adj.l7[i] = 3.0 * adj.l3[i][0];
    }
    adj.l8 = adj.l1[0];
    const SpaceField N_y0 = detail::upwind_N_y(level_view(traj, 0), g);
    SpaceField f(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) f[j] = g.y(j) * N_y0[j] * adj.l1[0][j] / traj.S[0];
    adj.l9 = -trapezoid(f, g) - adj.l4[0];
}

/// Solve the full multiplier system backward in time. The march at each
/// level follows the order: l1 step, l4 step, l2 boundary value from l4,
/// l2 integration, l3 shooting solve.
inline AdjointTrajectory solve_adjoint(const StateTrajectory& traj,
                                       const Observations& obs, const Parameters& p,
                                       const ModelConstants& mc, const Grid& g,
                                       const ShootingConfig& sc = {}) {
    check_shapes(obs, g);
    AdjointTrajectory adj;
    adj.l1.resize(g.n_levels());
    adj.l2.resize(g.n_levels());
    adj.l3.resize(g.n_levels());
    adj.l4.assign(static_cast<std::size_t>(g.n_levels()), 0.0);

    TerminalSlice terminal = terminal_slice(traj, p, mc, g, sc);
    adj.l1[g.n_t] = std::move(terminal.l1);
    adj.l2[g.n_t] = std::move(terminal.l2);
    adj.l3[g.n_t] = std::move(terminal.l3);
    adj.l4[g.n_t] = terminal.l4;

    // Forcing terms are integrated by the trapezoid rule over each backward
    // step, matching the time quadrature of the misfit functional; the l4
    // recursion gets a deferred trapezoid correction for the same reason.
    SpaceField data(static_cast<std::size_t>(g.n_y));
    SpaceField dterm(static_cast<std::size_t>(g.n_y));
    for (int i = g.n_t; i >= 1; --i) {
        const LevelView view = level_view(traj, i);
        const LevelView view_prev = level_view(traj, i - 1);
        for (int j = 0; j < g.n_y; ++j)
            data[j] = obs.mu1 * 0.5 *
                      ((obs.N_star[i][j] - traj.N[i][j]) +
                       (obs.N_star[i - 1][j] - traj.N[i - 1][j]));
        const double radius_trap =
            obs.mu2 * 0.5 * ((obs.S_star[i] - traj.S[i]) +
                             (obs.S_star[i - 1] - traj.S[i - 1]));

        const SpaceField rate = detail::lambda1_rate(adj.l1[i], view, adj.l2[i],
                                                     adj.l3[i], data, p, mc, g);
        adj.l1[i - 1].resize(static_cast<std::size_t>(g.n_y));
        for (int j = 0; j < g.n_y; ++j)
            adj.l1[i - 1][j] = adj.l1[i][j] + g.dt * rate[j];

        // Provisional l4 step and instantaneous solves at level i-1.
        adj.l4[i - 1] = step_lambda4_backward(adj.l4[i], view, view_prev, adj.l1[i],
                                              adj.l1[i - 1], adj.l2[i], adj.l3[i],
                                              radius_trap, p, mc, g);
        adj.l2[i - 1] = solve_lambda2_ode(adj.l1[i - 1], view_prev, adj.l4[i - 1], g, sc);
        adj.l3[i - 1] = solve_lambda3_bvp(adj.l1[i - 1], adj.l2[i - 1], view_prev,
                                          p, mc, g, sc);

        // Deferred correction of l4: trapezoid the smooth integrand terms
        // between the two levels (the time-difference term is already
        // centered at the half level), then refresh l2 and l3 with the
        // corrected boundary value.
        auto smooth_rate = [&](const LevelView& lv, const SpaceField& l1s,
                               const SpaceField& l2s, const SpaceField& l3s) {
            const SpaceField Ny = detail::upwind_N_y(lv, g);
            SpaceField f(static_cast<std::size_t>(g.n_y));
            for (int j = 0; j < g.n_y; ++j) {
                const auto r = rates(lv.C[j], p, mc);
                f[j] = Ny[j] * lv.V[j] / (lv.S * lv.S) * l1s[j] +
                       r.b * lv.N[j] * l2s[j] + 2.0 * r.k * lv.N[j] * lv.S * l3s[j];
            }
            return trapezoid(f, g);
        };
        const SpaceField Ny_hi = detail::upwind_N_y(view, g);
        const SpaceField Ny_lo = detail::upwind_N_y(view_prev, g);
        for (int j = 0; j < g.n_y; ++j)
            dterm[j] = g.y(j) * 0.5 * (1.0 / view.S + 1.0 / view_prev.S) *
                       (Ny_hi[j] * adj.l1[i][j] - Ny_lo[j] * adj.l1[i - 1][j]) / g.dt;
        const double corrected_rate =
            0.5 * (smooth_rate(view, adj.l1[i], adj.l2[i], adj.l3[i]) +
                   smooth_rate(view_prev, adj.l1[i - 1], adj.l2[i - 1],
                               adj.l3[i - 1])) -
            trapezoid(dterm, g) + radius_trap;
        adj.l4[i - 1] = adj.l4[i] - g.dt * corrected_rate;
        adj.l2[i - 1] = solve_lambda2_ode(adj.l1[i - 1], view_prev, adj.l4[i - 1], g, sc);
        adj.l3[i - 1] = solve_lambda3_bvp(adj.l1[i - 1], adj.l2[i - 1], view_prev,
                                          p, mc, g, sc);
    }
    auxiliary_multipliers(adj, traj, g);
    return adj;
}

} // namespace spheroid
