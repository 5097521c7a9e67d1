#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spheroid/io.hpp"
#include "spheroid/objective.hpp"
#include "spheroid/verify.hpp"

using namespace spheroid;

namespace {
const Grid kGrid{30, 0.01, 50};
const ModelConstants kMc{0.5, 0.5, 0.005};
const Parameters kTrue{0.1, 0.05, 0.9};
const SolverConfig kCfg;
const ShootingConfig kSc;

struct Setup {
    InitialCondition ic;
    Observations obs;
    StateTrajectory traj_true;
};

const Setup& setup() {
    static const Setup s = [] {
        Setup out;
        out.ic = grow_from_seed(kTrue, kMc, kCfg, 34.0, kGrid);
        out.obs =
            generate_observations(kTrue, out.ic, kGrid, kMc, kCfg, {}, 100.0, 1.0);
        out.traj_true = solve_forward(kTrue, out.ic, kGrid, kMc, kCfg);
        return out;
    }();
    return s;
}
} // namespace

TEST_CASE("eval_J: zero at the generating trajectory") {
    const auto& s = setup();
    CHECK(eval_J(s.traj_true, s.obs) == 0.0);
}

TEST_CASE("eval_J: mu1 = 0 reduces to the radius-only functional") {
    const auto& s = setup();
    StateTrajectory traj = s.traj_true;
    for (auto& S : traj.S) S += 0.3; // perturb the radius only
    Observations radius_only = s.obs;
    radius_only.mu1 = 0.0;
    radius_only.mu2 = 1.0;
    std::vector<double> sq(kGrid.n_levels());
    for (int i = 0; i <= kGrid.n_t; ++i) {
        const double d = traj.S[i] - s.obs.S_star[i];
        sq[i] = d * d;
    }
    CHECK(eval_J(traj, radius_only) ==
          doctest::Approx(0.5 * time_trapezoid(sq, kGrid)).epsilon(1e-14));
}

TEST_CASE("eval_J: constant radius offset") {
    const auto& s = setup();
    StateTrajectory traj = s.traj_true;
    const double offset = 0.37;
    for (auto& S : traj.S) S += offset;
    Observations obs = s.obs;
    obs.mu1 = 0.0; // N part would otherwise still be zero, keep it explicit
    obs.mu2 = 1.0;
    CHECK(eval_J(traj, obs) ==
          doctest::Approx(0.25 * offset * offset).epsilon(1e-13)); // T = 0.5
}

TEST_CASE("eval_J: shape mismatch throws") {
    const auto& s = setup();
    Observations bad = s.obs;
    bad.S_star.pop_back();
    CHECK_THROWS_AS(eval_J(s.traj_true, bad), std::invalid_argument);
}

TEST_CASE("functional and gradient scale linearly with the weights") {
    const auto& s = setup();
    const Parameters p{0.12, 0.06, 0.8};
    const StateTrajectory traj = solve_forward(p, s.ic, kGrid, kMc, kCfg);
    Observations scaled = s.obs;
    const double factor = 3.5;
    scaled.mu1 *= factor;
    scaled.mu2 *= factor;

    const AdjointTrajectory adj1 = solve_adjoint(traj, s.obs, p, kMc, kGrid, kSc);
    const AdjointTrajectory adj2 = solve_adjoint(traj, scaled, p, kMc, kGrid, kSc);
    const GradientVector g1 = assemble_gradient(traj, adj1, p, kMc, kGrid);
    const GradientVector g2 = assemble_gradient(traj, adj2, p, kMc, kGrid);

    CHECK(eval_J(traj, scaled) ==
          doctest::Approx(factor * eval_J(traj, s.obs)).epsilon(1e-12));
    CHECK(g2.c_c == doctest::Approx(factor * g1.c_c).epsilon(1e-10));
    CHECK(g2.c_d == doctest::Approx(factor * g1.c_d).epsilon(1e-10));
    CHECK(g2.sigma == doctest::Approx(factor * g1.sigma).epsilon(1e-10));
}

TEST_CASE("gradient assembly: zero multipliers give the zero vector") {
    const auto& s = setup();
    AdjointTrajectory adj;
    adj.l1 = make_space_time_field(kGrid, 0.0);
    adj.l2 = make_space_time_field(kGrid, 0.0);
    adj.l3 = make_space_time_field(kGrid, 0.0);
    const GradientVector g = assemble_gradient(s.traj_true, adj, kTrue, kMc, kGrid);
    CHECK(g.c_c == 0.0);
    CHECK(g.c_d == 0.0);
    CHECK(g.sigma == 0.0);
}

TEST_CASE("gradient assembly: the l3 term only reaches the c_c component") {
    const auto& s = setup();
    AdjointTrajectory adj;
    adj.l1 = make_space_time_field(kGrid, 0.0);
    adj.l2 = make_space_time_field(kGrid, 0.0);
    adj.l3 = make_space_time_field(kGrid, 0.4); // arbitrary nonzero field
    const GradientVector g = assemble_gradient(s.traj_true, adj, kTrue, kMc, kGrid);
    CHECK(g.c_c != 0.0);
    CHECK(g.c_d == 0.0);
    CHECK(g.sigma == 0.0);
}

TEST_CASE("reduced objective at the generating parameters") {
    const auto& s = setup();
    const ObjectiveResult res =
        reduced_objective(kTrue, s.ic, s.obs, kGrid, kMc, kCfg, kSc);
    CHECK(res.J < 1e-10);
    CHECK(res.gradient.norm() < 1e-10);
}

TEST_CASE("reduced objective is positive away from the generating point") {
    const auto& s = setup();
    const ObjectiveResult res = reduced_objective({0.16, 0.03, 1.0}, s.ic, s.obs,
                                                  kGrid, kMc, kCfg, kSc);
    CHECK(res.J > 1e-4);
}

TEST_CASE("gradient points uphill from below the generating c_c") {
    const auto& s = setup();
    const ObjectiveResult res = reduced_objective({0.085, 0.05, 0.9}, s.ic, s.obs,
                                                  kGrid, kMc, kCfg, kSc);
    // J decreases as c_c increases toward 0.1
    CHECK(res.gradient.c_c < 0.0);
}

TEST_CASE("adjoint gradient matches central finite differences at the start point") {
    const auto& s = setup();
    const GradCheckReport rep =
        grad_check({0.16, 0.03, 1.0}, s.ic, s.obs, kGrid, kMc, kCfg, kSc);
    CHECK(rep.pass);
    for (int m = 0; m < 3; ++m) CHECK(rep.rel_error[m] < 1e-2);
}
