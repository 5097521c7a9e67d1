#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "spheroid/kinetics.hpp"

using namespace spheroid;

namespace {
const ModelConstants kDefault{0.5, 0.5, 0.005};

double uni(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
}
} // namespace

TEST_CASE("rate_a closed-form values") {
    const Parameters p{0.1, 0.05, 0.9};
    // k_m(0) = 0, so a(0) = -B/A regardless of p
    CHECK(rate_a(0.0, p, kDefault) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(rate_a(0.0, {0.7, 0.3, 1.3}, kDefault) == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(rate_a(1.0, p, kDefault) ==
          doctest::Approx(0.8376623376623376).epsilon(1e-13));
    // sigma = 0 freezes the death term at B/A
    CHECK(rate_a(1.0, {0.1, 0.05, 0.0}, kDefault) ==
          doctest::Approx(1.0 / 1.1 - 0.5).epsilon(1e-14));
}

TEST_CASE("rate_b closed-form values and b-a identity") {
    const Parameters p{0.1, 0.05, 0.9};
    ModelConstants mc = kDefault;

    SUBCASE("delta = 1 removes the death term from b") {
        mc.delta = 1.0;
        for (double C : {0.0, 0.2, 1.0})
            CHECK(rate_b(C, p, mc) == doctest::Approx(C / (p.c_c + C)).epsilon(1e-14));
    }
    SUBCASE("values at the defaults") {
        CHECK(rate_b(0.0, p, mc) == doctest::Approx(-0.25).epsilon(1e-14));
        CHECK(rate_b(1.0, p, mc) ==
              doctest::Approx(0.8733766233766234).epsilon(1e-13));
    }
    SUBCASE("b - a = delta (B/A) (1 - sigma C/(c_d+C)), nonnegative for sigma <= 1") {
        std::mt19937_64 rng(11);
        for (int t = 0; t < 200; ++t) {
            const Parameters q{uni(rng, 0.01, 1.0), uni(rng, 0.01, 1.0),
                               uni(rng, 0.0, 1.0)};
            const double C = uni(rng, 0.0, 2.0);
            const double gap = rate_b(C, q, mc) - rate_a(C, q, mc);
            const double expect =
                mc.delta * mc.b_over_a * (1.0 - q.sigma * C / (q.c_d + C));
            CHECK(gap == doctest::Approx(expect).epsilon(1e-12));
            CHECK(gap >= -1e-15);
        }
    }
}

TEST_CASE("rate_k saturation") {
    const Parameters p{0.1, 0.05, 0.9};
    CHECK(rate_k(0.0, p, kDefault) == 0.0);
    CHECK(rate_k(1e12, p, kDefault) ==
          doctest::Approx(kDefault.beta_hat_a).epsilon(1e-10));
    CHECK(rate_k(p.c_c, p, kDefault) ==
          doctest::Approx(0.5 * kDefault.beta_hat_a).epsilon(1e-14));
    // independent of c_d and sigma
    CHECK(rate_k(0.3, p, kDefault) ==
          rate_k(0.3, {p.c_c, 0.9, 1.7}, kDefault));
    // range [0, beta_hat_a)
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
        const double k = rate_k(uni(rng, 0.0, 50.0), p, kDefault);
        CHECK(k >= 0.0);
        CHECK(k < kDefault.beta_hat_a);
    }
}

TEST_CASE("negative concentration is a domain error") {
    const Parameters p{0.1, 0.05, 0.9};
    CHECK_THROWS_AS(rate_a(-0.1, p, kDefault), std::domain_error);
    CHECK_THROWS_AS(rate_b(-1e-9, p, kDefault), std::domain_error);
    CHECK_THROWS_AS(rate_k(-2.0, p, kDefault), std::domain_error);
    CHECK_THROWS_AS(rates_dC(-0.5, p, kDefault), std::domain_error);
    CHECK_THROWS_AS(rates_dp(-0.5, p, kDefault), std::domain_error);
}

TEST_CASE("concentration derivatives match central differences") {
    std::mt19937_64 rng(17);
    const double h = 1e-6;
    for (int t = 0; t < 50; ++t) {
        const Parameters p{uni(rng, 0.02, 1.0), uni(rng, 0.02, 1.0),
                           uni(rng, 0.0, 2.0)};
        const double C = uni(rng, 0.05, 2.0);
        const auto sl = rates_dC(C, p, kDefault);
        const double fa = (rate_a(C + h, p, kDefault) - rate_a(C - h, p, kDefault)) / (2 * h);
        const double fb = (rate_b(C + h, p, kDefault) - rate_b(C - h, p, kDefault)) / (2 * h);
        const double fk = (rate_k(C + h, p, kDefault) - rate_k(C - h, p, kDefault)) / (2 * h);
        CHECK(sl.da_dC == doctest::Approx(fa).epsilon(1e-6));
        CHECK(sl.db_dC == doctest::Approx(fb).epsilon(1e-6));
        CHECK(sl.dk_dC == doctest::Approx(fk).epsilon(1e-6));
    }
    // sigma = 0 collapses da/dC and db/dC to the mitosis slope
    const Parameters p0{0.2, 0.4, 0.0};
    const auto sl = rates_dC(0.7, p0, kDefault);
    CHECK(sl.da_dC == doctest::Approx(0.2 / (0.9 * 0.9)).epsilon(1e-14));
    CHECK(sl.db_dC == sl.da_dC);
    // dk/dC at C=0 is beta_hat_a / c_c
    CHECK(rates_dC(0.0, p0, kDefault).dk_dC ==
          doctest::Approx(kDefault.beta_hat_a / p0.c_c).epsilon(1e-14));
}

TEST_CASE("parameter derivatives match central differences") {
    std::mt19937_64 rng(23);
    const double h = 1e-6;
    for (int t = 0; t < 50; ++t) {
        const Parameters p{uni(rng, 0.02, 1.0), uni(rng, 0.02, 1.0),
                           uni(rng, 0.05, 2.0)};
        const double C = uni(rng, 0.05, 2.0);
        const auto jac = rates_dp(C, p, kDefault);
        for (int m = 0; m < 3; ++m) {
            auto hi = p.as_array(), lo = p.as_array();
            hi[m] += h;
            lo[m] -= h;
            const Parameters ph = Parameters::from_array(hi);
            const Parameters pl = Parameters::from_array(lo);
            CHECK(jac.da[m] == doctest::Approx((rate_a(C, ph, kDefault) -
                                                rate_a(C, pl, kDefault)) /
                                               (2 * h))
                                   .epsilon(1e-6));
            CHECK(jac.db[m] == doctest::Approx((rate_b(C, ph, kDefault) -
                                                rate_b(C, pl, kDefault)) /
                                               (2 * h))
                                   .epsilon(1e-6));
            CHECK(jac.dk[m] == doctest::Approx((rate_k(C, ph, kDefault) -
                                                rate_k(C, pl, kDefault)) /
                                               (2 * h))
                                   .epsilon(1e-6));
        }
        // k carries no c_d or sigma dependence
        CHECK(jac.dk[1] == 0.0);
        CHECK(jac.dk[2] == 0.0);
    }
    // every entry carries a factor C
    const auto at_zero = rates_dp(0.0, {0.1, 0.05, 0.9}, kDefault);
    for (int m = 0; m < 3; ++m) {
        CHECK(at_zero.da[m] == 0.0);
        CHECK(at_zero.db[m] == 0.0);
        CHECK(at_zero.dk[m] == 0.0);
    }
}

TEST_CASE("rate_a strictly increasing in C") {
    std::mt19937_64 rng(29);
    for (int t = 0; t < 30; ++t) {
        const Parameters p{uni(rng, 0.02, 1.0), uni(rng, 0.02, 1.0),
                           uni(rng, 0.0, 2.0)};
        double prev = rate_a(0.0, p, kDefault);
        for (double C = 0.05; C <= 2.0; C += 0.05) {
            const double cur = rate_a(C, p, kDefault);
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("validation rejects out-of-domain values") {
    CHECK_THROWS_AS(validate(Parameters{0.0, 0.05, 0.9}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Parameters{0.1, -0.05, 0.9}), std::invalid_argument);
    CHECK_THROWS_AS(validate(Parameters{0.1, 0.05, -0.1}), std::invalid_argument);
    CHECK_NOTHROW(validate(Parameters{0.1, 0.05, 0.0}));
    CHECK_THROWS_AS(validate(ModelConstants{0.0, 0.5, 0.005}), std::invalid_argument);
    CHECK_THROWS_AS(validate(ModelConstants{0.5, 1.5, 0.005}), std::invalid_argument);
    CHECK_THROWS_AS(validate(ModelConstants{0.5, 0.5, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(validate(ModelConstants{0.5, 1.0, 0.005}));
}
