#pragma once

#include <stdexcept>

#include "spheroid/grid.hpp"

namespace spheroid {

/// Radius and live-cell-density data sampled on the solver grid, with the
/// misfit weights that define the objective.
struct Observations {
    SpaceTimeField N_star;       ///< N*(y_j, t_i), one slice per time level
    std::vector<double> S_star;  ///< S*(t_i)
    double mu1 = 100.0;          ///< weight of the density misfit, >= 0
    double mu2 = 1.0;            ///< weight of the radius misfit, >= 0
};

// Both-zero weights are rejected at configuration load; the solvers accept
// them (the fully unweighted problem is the homogeneity edge case).
inline void check_shapes(const Observations& obs, const Grid& g) {
    if (static_cast<int>(obs.S_star.size()) != g.n_levels() ||
        static_cast<int>(obs.N_star.size()) != g.n_levels())
        throw std::invalid_argument("observations: time level count does not match grid");
    for (const auto& slice : obs.N_star)
        if (static_cast<int>(slice.size()) != g.n_y)
            throw std::invalid_argument("observations: landmark count does not match grid");
    if (obs.mu1 < 0.0 || obs.mu2 < 0.0)
        throw std::invalid_argument("observations: weights must be nonnegative");
}

} // namespace spheroid
