#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spheroid/objective.hpp"

namespace spheroid {

/// Admissible box, componentwise [lo, hi].
struct BoxBounds {
    std::array<double, 2> c_c{0.01, 1.0};
    std::array<double, 2> c_d{0.01, 1.0};
    std::array<double, 2> sigma{0.0, 2.0};
};

/// Componentwise clamp onto the box; idempotent and nonexpansive.
inline Parameters project(const Parameters& p, const BoxBounds& box) {
    return {std::clamp(p.c_c, box.c_c[0], box.c_c[1]),
            std::clamp(p.c_d, box.c_d[0], box.c_d[1]),
            std::clamp(p.sigma, box.sigma[0], box.sigma[1])};
}

struct OptimizerConfig {
    double alpha = 0.1;    ///< fixed descent step length
    BoxBounds box;
    double tol_J = 1e-6;   ///< stop when the functional falls below this
    double tol_grad = 1e-12; ///< stop on gradient norm
    double tol_step = 1e-8;  ///< stop on iterate distance
    int max_iter = 300;
};

struct IterationRecord {
    int k = 0;
    Parameters p;
    double J = 0.0;
    GradientVector grad;
    double grad_norm = 0.0;
    double step_norm = 0.0;
};

struct MinimizeResult {
    Parameters p_best;
    double J_best = 0.0;
    std::vector<IterationRecord> trace;
    std::vector<std::string> stop_rules; ///< satisfied rules in check order J, grad, step; or "max_iter"
    bool step_warning = false;           ///< J increased over 5 consecutive iterations
};

namespace detail {
inline double distance(const Parameters& a, const Parameters& b) {
    const double d0 = a.c_c - b.c_c, d1 = a.c_d - b.c_d, d2 = a.sigma - b.sigma;
    return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}
} // namespace detail

/// Projected gradient descent with a fixed step:
/// p^{k+1} = project(p^k - alpha * grad J(p^k)).
/// Stops when J < tol_J, |grad| < tol_grad, the iterate distance falls below
/// tol_step, or after max_iter steps; returns the best-J iterate seen and
/// the full trace. A step-size warning is flagged when J increases over five
/// consecutive iterations.
inline MinimizeResult minimize(const Parameters& p0, const InitialCondition& ic,
                               const Observations& obs, const Grid& g,
                               const ModelConstants& mc, const SolverConfig& cfg,
                               const ShootingConfig& sc, const OptimizerConfig& ocfg) {
    MinimizeResult result;
    Parameters p = project(p0, ocfg.box);
    ObjectiveResult eval = reduced_objective(p, ic, obs, g, mc, cfg, sc);
    result.trace.push_back({0, p, eval.J, eval.gradient, eval.gradient.norm(), 0.0});
    result.p_best = p;
    result.J_best = eval.J;

    auto stop_rules_at = [&](double J, double grad_norm, double step_norm,
                             bool have_step) {
        std::vector<std::string> rules;
        if (J < ocfg.tol_J) rules.push_back("J");
        if (grad_norm < ocfg.tol_grad) rules.push_back("grad");
        if (have_step && step_norm < ocfg.tol_step) rules.push_back("step");
        return rules;
    };

    result.stop_rules = stop_rules_at(eval.J, eval.gradient.norm(), 0.0, false);
    if (!result.stop_rules.empty()) return result;

    int increase_streak = 0;
    for (int k = 1; k <= ocfg.max_iter; ++k) {
        const Parameters p_next =
            project({p.c_c - ocfg.alpha * eval.gradient.c_c,
                     p.c_d - ocfg.alpha * eval.gradient.c_d,
                     p.sigma - ocfg.alpha * eval.gradient.sigma},
                    ocfg.box);
        const double step_norm = detail::distance(p_next, p);
        const double J_prev = eval.J;
        eval = reduced_objective(p_next, ic, obs, g, mc, cfg, sc);
        result.trace.push_back(
            {k, p_next, eval.J, eval.gradient, eval.gradient.norm(), step_norm});

        if (eval.J > J_prev) {
            if (++increase_streak >= 5) result.step_warning = true;
        } else {
            increase_streak = 0;
        }
        if (eval.J < result.J_best) {
            result.J_best = eval.J;
            result.p_best = p_next;
        }
        p = p_next;

        result.stop_rules = stop_rules_at(eval.J, eval.gradient.norm(), step_norm, true);
        if (!result.stop_rules.empty()) return result;
    }
    result.stop_rules = {"max_iter"};
    return result;
}

} // namespace spheroid
