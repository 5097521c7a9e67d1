#pragma once

#include <stdexcept>
#include <string>

namespace spheroid {

/// Base class for all runtime failures raised by the solvers.
class solver_error : public std::runtime_error {
public:
    explicit solver_error(const std::string& what) : std::runtime_error(what) {}
};

/// Explicit time step violated the advective stability bound.
class cfl_error : public solver_error {
public:
    cfl_error(const std::string& what, double courant)
        : solver_error(what), courant_number(courant) {}
    double courant_number;
};

/// Nonlinear iteration (nutrient BVP) failed to reach tolerance.
class convergence_error : public solver_error {
public:
    convergence_error(const std::string& what, double residual, int iterations)
        : solver_error(what), last_residual(residual), iterations(iterations) {}
    double last_residual;
    int iterations;
};

/// Shooting solve could not bracket or locate a root.
class root_find_error : public solver_error {
public:
    using solver_error::solver_error;
};

/// Bad run configuration (schema violation, unresolvable path, invalid value).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spheroid
