#pragma once

// Umbrella header: forward free-boundary solver, adjoint multipliers,
// misfit gradient, projected-descent inversion and run plumbing.

#include "spheroid/adjoint.hpp"
#include "spheroid/errors.hpp"
#include "spheroid/forward.hpp"
#include "spheroid/grid.hpp"
#include "spheroid/io.hpp"
#include "spheroid/kinetics.hpp"
#include "spheroid/objective.hpp"
#include "spheroid/observations.hpp"
#include "spheroid/optimizer.hpp"
#include "spheroid/tridiagonal.hpp"
#include "spheroid/verify.hpp"
