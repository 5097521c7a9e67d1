#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spheroid/io.hpp"
#include "spheroid/optimizer.hpp"

using namespace spheroid;

namespace {
const Grid kGrid{30, 0.01, 50};
const ModelConstants kMc{0.5, 0.5, 0.005};
const Parameters kTrue{0.1, 0.05, 0.9};
const SolverConfig kCfg;
const ShootingConfig kSc;

double uni(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}
} // namespace

TEST_CASE("projection: identity inside the box, componentwise clamp outside") {
    const BoxBounds unit{{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}};
    const Parameters inside{0.3, 0.7, 0.5};
    const Parameters pi = project(inside, unit);
    CHECK(pi.c_c == inside.c_c);
    CHECK(pi.c_d == inside.c_d);
    CHECK(pi.sigma == inside.sigma);

    const Parameters out = project({-1.0, 0.5, 3.0}, unit);
    CHECK(out.c_c == 0.0);
    CHECK(out.c_d == 0.5);
    CHECK(out.sigma == 1.0);

    // idempotent
    const Parameters twice = project(out, unit);
    CHECK(twice.c_c == out.c_c);
    CHECK(twice.c_d == out.c_d);
    CHECK(twice.sigma == out.sigma);
}

TEST_CASE("projection is nonexpansive") {
    const BoxBounds box;
    std::mt19937_64 rng(5);
    for (int t = 0; t < 300; ++t) {
        const Parameters a{uni(rng, -2, 3), uni(rng, -2, 3), uni(rng, -2, 4)};
        const Parameters b{uni(rng, -2, 3), uni(rng, -2, 3), uni(rng, -2, 4)};
        const Parameters pa = project(a, box), pb = project(b, box);
        auto dist = [](const Parameters& x, const Parameters& y) {
            const double d0 = x.c_c - y.c_c, d1 = x.c_d - y.c_d,
                         d2 = x.sigma - y.sigma;
            return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
        };
        CHECK(dist(pa, pb) <= dist(a, b) + 1e-15);
    }
}

TEST_CASE("minimize: immediate stop at the generating parameters") {
    const InitialCondition ic = grow_from_seed(kTrue, kMc, kCfg, 34.0, kGrid);
    const Observations obs =
        generate_observations(kTrue, ic, kGrid, kMc, kCfg, {}, 100.0, 1.0);
    OptimizerConfig ocfg;
    const MinimizeResult res = minimize(kTrue, ic, obs, kGrid, kMc, kCfg, kSc, ocfg);
    CHECK(res.trace.size() == 1);
    CHECK(res.J_best < ocfg.tol_J);
    REQUIRE(!res.stop_rules.empty());
    CHECK(res.stop_rules.front() == "J");
}

TEST_CASE("minimize: short run descends, stays in the box, records the trace") {
    const InitialCondition ic = grow_from_seed(kTrue, kMc, kCfg, 34.0, kGrid);
    const Observations obs =
        generate_observations(kTrue, ic, kGrid, kMc, kCfg, {}, 100.0, 1.0);
    OptimizerConfig ocfg;
    ocfg.max_iter = 50;
    const MinimizeResult res =
        minimize({0.12, 0.055, 0.92}, ic, obs, kGrid, kMc, kCfg, kSc, ocfg);
    REQUIRE(res.trace.size() <= 51);
    CHECK(res.trace.front().J > res.trace.back().J);
    for (std::size_t k = 0; k < res.trace.size(); ++k) {
        const auto& r = res.trace[k];
        CHECK(r.k == static_cast<int>(k));
        CHECK(std::isfinite(r.J));
        CHECK(r.p.c_c >= ocfg.box.c_c[0]);
        CHECK(r.p.c_c <= ocfg.box.c_c[1]);
        CHECK(r.p.c_d >= ocfg.box.c_d[0]);
        CHECK(r.p.c_d <= ocfg.box.c_d[1]);
        CHECK(r.p.sigma >= ocfg.box.sigma[0]);
        CHECK(r.p.sigma <= ocfg.box.sigma[1]);
        if (k >= 1) CHECK(res.trace[k].J <= res.trace[k - 1].J); // monotone here
    }
    CHECK(!res.step_warning);
    CHECK(res.J_best <= res.trace.back().J);
}

TEST_CASE("minimize: oversized step raises the step-size warning") {
    const InitialCondition ic = grow_from_seed(kTrue, kMc, kCfg, 34.0, kGrid);
    const Observations obs =
        generate_observations(kTrue, ic, kGrid, kMc, kCfg, {}, 100.0, 1.0);
    OptimizerConfig ocfg;
    // just past the stable step bound of the steep c_c direction (2/L ~ 0.33),
    // started slightly off the minimum: the iterates oscillate with growing
    // amplitude and J increases every iteration
    ocfg.alpha = 0.4;
    ocfg.max_iter = 30;
    const MinimizeResult res =
        minimize({0.101, 0.05, 0.9}, ic, obs, kGrid, kMc, kCfg, kSc, ocfg);
    CHECK(res.step_warning);
    // best-J iterate is still reported
    CHECK(res.J_best <= res.trace.front().J);
}

TEST_CASE("minimize: max_iter cap is reported") {
    const InitialCondition ic = grow_from_seed(kTrue, kMc, kCfg, 34.0, kGrid);
    const Observations obs =
        generate_observations(kTrue, ic, kGrid, kMc, kCfg, {}, 100.0, 1.0);
    OptimizerConfig ocfg;
    ocfg.max_iter = 3;
    const MinimizeResult res =
        minimize({0.16, 0.03, 1.0}, ic, obs, kGrid, kMc, kCfg, kSc, ocfg);
    CHECK(res.trace.size() == 4);
    REQUIRE(res.stop_rules.size() == 1);
    CHECK(res.stop_rules.front() == "max_iter");
}
