#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace spheroid {

/// The inversion unknowns: half-saturation constants of the birth and death
/// Michaelis-Menten laws and the death-suppression factor.
struct Parameters {
    double c_c = 0.1;   ///< nutrient half-saturation for mitosis, > 0
    double c_d = 0.05;  ///< nutrient half-saturation for death, > 0
    double sigma = 0.9; ///< death suppression factor, >= 0

    std::array<double, 3> as_array() const { return {c_c, c_d, sigma}; }
    static Parameters from_array(const std::array<double, 3>& a) {
        return {a[0], a[1], a[2]};
    }
};

inline void validate(const Parameters& p) {
    if (!(p.c_c > 0.0) || !std::isfinite(p.c_c))
        throw std::invalid_argument("parameters: c_c must be finite and > 0");
    if (!(p.c_d > 0.0) || !std::isfinite(p.c_d))
        throw std::invalid_argument("parameters: c_d must be finite and > 0");
    if (!(p.sigma >= 0.0) || !std::isfinite(p.sigma))
        throw std::invalid_argument("parameters: sigma must be finite and >= 0");
}

/// Fixed dimensionless groups of the nondimensional model. Only the three
/// combinations that actually enter the equations are stored.
struct ModelConstants {
    double b_over_a = 0.5;    ///< death-to-mitosis rate scale B/A, > 0
    double delta = 0.5;       ///< dead/live cell volume ratio V_D/V_L, in (0,1]
    double beta_hat_a = 0.005; ///< consumption group (beta_hat * A), > 0
};

inline void validate(const ModelConstants& mc) {
    if (!(mc.b_over_a > 0.0))
        throw std::invalid_argument("model constants: b_over_a must be > 0");
    if (!(mc.delta > 0.0 && mc.delta <= 1.0))
        throw std::invalid_argument("model constants: delta must be in (0,1]");
    if (!(mc.beta_hat_a > 0.0))
        throw std::invalid_argument("model constants: beta_hat_a must be > 0");
}

namespace detail {
inline void require_nonnegative_concentration(double C) {
    if (C < 0.0)
        throw std::domain_error("rate evaluation: concentration must be >= 0, got " +
                                std::to_string(C));
}
} // namespace detail

/// Saturating birth fraction k_m/A = C/(c_c + C).
inline double mitosis_fraction(double C, const Parameters& p) {
    return C / (p.c_c + C);
}

/// Death modulation 1 - sigma*C/(c_d + C); may go negative for sigma > 1.
inline double death_modulation(double C, const Parameters& p) {
    return 1.0 - p.sigma * C / (p.c_d + C);
}

/// Net volumetric growth rate a(C) = C/(c_c+C) - (B/A)(1 - sigma*C/(c_d+C)).
inline double rate_a(double C, const Parameters& p, const ModelConstants& mc) {
    detail::require_nonnegative_concentration(C);
    return mitosis_fraction(C, p) - mc.b_over_a * death_modulation(C, p);
}

/// Volume-source rate b(C) = C/(c_c+C) - (1-delta)(B/A)(1 - sigma*C/(c_d+C)).
/// Satisfies b - a = delta*(B/A)*(1 - sigma*C/(c_d+C)).
inline double rate_b(double C, const Parameters& p, const ModelConstants& mc) {
    detail::require_nonnegative_concentration(C);
    return mitosis_fraction(C, p) -
           (1.0 - mc.delta) * mc.b_over_a * death_modulation(C, p);
}

/// Nutrient consumption rate k(C) = beta_hat_a * C/(c_c+C).
/// Nonnegative, increasing in C, independent of c_d and sigma.
inline double rate_k(double C, const Parameters& p, const ModelConstants& mc) {
    detail::require_nonnegative_concentration(C);
    return mc.beta_hat_a * mitosis_fraction(C, p);
}

/// The three rates evaluated at one concentration.
struct RateValues {
    double a, b, k;
};

inline RateValues rates(double C, const Parameters& p, const ModelConstants& mc) {
    detail::require_nonnegative_concentration(C);
    const double m = mitosis_fraction(C, p);
    const double d = death_modulation(C, p);
    return {m - mc.b_over_a * d, m - (1.0 - mc.delta) * mc.b_over_a * d,
            mc.beta_hat_a * m};
}

/// Partial derivatives of (a, b, k) with respect to the concentration.
struct RateSlopes {
    double da_dC, db_dC, dk_dC;
};

inline RateSlopes rates_dC(double C, const Parameters& p, const ModelConstants& mc) {
    detail::require_nonnegative_concentration(C);
    const double mc_slope = p.c_c / ((p.c_c + C) * (p.c_c + C));
    const double dd_slope = p.c_d / ((p.c_d + C) * (p.c_d + C)); // d/dC of C/(c_d+C)
    return {mc_slope + mc.b_over_a * p.sigma * dd_slope,
            mc_slope + (1.0 - mc.delta) * mc.b_over_a * p.sigma * dd_slope,
            mc.beta_hat_a * mc_slope};
}

/// Partial derivatives of (a, b, k) with respect to the parameter vector,
/// component order (c_c, c_d, sigma). k depends on c_c only.
struct RateJacobian {
    std::array<double, 3> da;
    std::array<double, 3> db;
    std::array<double, 3> dk;
};

inline RateJacobian rates_dp(double C, const Parameters& p, const ModelConstants& mc) {
    detail::require_nonnegative_concentration(C);
    const double dm_dcc = -C / ((p.c_c + C) * (p.c_c + C));
    const double frac_d = C / (p.c_d + C);
    const double dfrac_dcd = -C / ((p.c_d + C) * (p.c_d + C));
    RateJacobian j;
    j.da = {dm_dcc, mc.b_over_a * p.sigma * dfrac_dcd, mc.b_over_a * frac_d};
    j.db = {dm_dcc, (1.0 - mc.delta) * mc.b_over_a * p.sigma * dfrac_dcd,
            (1.0 - mc.delta) * mc.b_over_a * frac_d};
    j.dk = {mc.beta_hat_a * dm_dcc, 0.0, 0.0};
    return j;
}

} // namespace spheroid
