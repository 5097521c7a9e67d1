// Mutation test of the gradient oracle: with the l2 coupling sign flipped in
// the l1 update, the finite-difference check must fail.
#define SPHEROID_LAMBDA2_COUPLING_SIGN (-1.0)

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spheroid/io.hpp"
#include "spheroid/verify.hpp"

using namespace spheroid;

TEST_CASE("sign-flipped l2 coupling is caught by the gradient check") {
    const Grid g{30, 0.01, 50};
    const ModelConstants mc{0.5, 0.5, 0.005};
    const Parameters p_true{0.1, 0.05, 0.9};
    const SolverConfig cfg;
    const ShootingConfig sc;
    const InitialCondition ic = grow_from_seed(p_true, mc, cfg, 34.0, g);
    const Observations obs =
        generate_observations(p_true, ic, g, mc, cfg, {}, 100.0, 1.0);
    const GradCheckReport rep =
        grad_check({0.16, 0.03, 1.0}, ic, obs, g, mc, cfg, sc);
    CHECK(!rep.pass);
    // the fault is large, not a marginal tolerance miss
    const double worst =
        std::max({rep.rel_error[0], rep.rel_error[1], rep.rel_error[2]});
    CHECK(worst > 0.1);
}
