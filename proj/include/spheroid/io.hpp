#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spheroid/errors.hpp"
#include "spheroid/forward.hpp"
#include "spheroid/objective.hpp"
#include "spheroid/optimizer.hpp"
#include "spheroid/verify.hpp"

namespace spheroid {

/// Multiplicative uniform noise: x <- x * (1 + level * u), u ~ U[-1, 1]
/// i.i.d. per sample, drawn deterministically from the configured seed.
struct NoiseSpec {
    double level = 0.0;
    std::uint64_t seed = 0;
    bool perturb_N = true;
    bool perturb_S = true;
};

namespace detail {

/// Deterministic uniform draw on [-1, 1] (bit-identical across platforms,
/// unlike std::uniform_real_distribution).
inline double uniform_symmetric(std::mt19937_64& rng) {
    return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
}

} // namespace detail

/// Sample observations from a forward solve at p_true and apply the noise
/// model. Draw order is fixed: all N samples (time level major, then node),
/// then all S samples, so a given seed always produces the same dataset.
inline Observations generate_observations(const Parameters& p_true,
                                          const InitialCondition& ic, const Grid& g,
                                          const ModelConstants& mc,
                                          const SolverConfig& cfg,
                                          const NoiseSpec& noise, double mu1,
                                          double mu2) {
    const StateTrajectory traj = solve_forward(p_true, ic, g, mc, cfg);
    Observations obs;
    obs.N_star = traj.N;
    obs.S_star = traj.S;
    obs.mu1 = mu1;
    obs.mu2 = mu2;
    if (noise.level > 0.0) {
        std::mt19937_64 rng(noise.seed);
        for (auto& slice : obs.N_star)
            for (auto& x : slice) {
                const double u = detail::uniform_symmetric(rng);
                if (noise.perturb_N) x *= 1.0 + noise.level * u;
            }
        for (auto& x : obs.S_star) {
            const double u = detail::uniform_symmetric(rng);
            if (noise.perturb_S) x *= 1.0 + noise.level * u;
        }
    }
    return obs;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct SweepSpec {
    int n_c_c = 20, n_c_d = 20;
    std::array<double, 2> range_c_c{0.05, 0.2};
    std::array<double, 2> range_c_d{0.01, 0.1};
    double sigma = 0.9;
};

struct GradCheckSpec {
    double fd_step = 1e-5;
    double tol = 1e-2;
    int random_points = 5;
    std::uint64_t seed = 7;
};

struct RunConfig {
    ModelConstants model;
    Grid grid;
    Parameters p_true{0.1, 0.05, 0.9};
    Parameters p0{0.16, 0.03, 1.0};
    double mu1 = 100.0, mu2 = 1.0;
    double seed_target_S = 34.0;
    bool explicit_initial = false; ///< bypass the seed growth
    double initial_N0 = 1.0;       ///< uniform initial live-cell fraction
    double initial_S0 = 1.0;
    SolverConfig solver;
    ShootingConfig shooting;
    OptimizerConfig optimizer;
    NoiseSpec noise;
    SweepSpec sweep;
    GradCheckSpec gradcheck;
    std::string observations_csv; ///< optional: load instead of generating
    std::string out_dir = "out";
};

namespace detail {

inline void require_keys(const nlohmann::json& obj, const char* section,
                         std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) { known = true; break; }
        if (!known)
            throw config_error(std::string("config: unknown key '") + it.key() +
                               "' in section '" + section + "'");
    }
}

template <typename T>
void read_into(const nlohmann::json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline void read_box(const nlohmann::json& obj, const char* key,
                     std::array<double, 2>& out) {
    if (!obj.contains(key)) return;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2)
        throw config_error(std::string("config: '") + key + "' must be [lo, hi]");
    out = {v[0].get<double>(), v[1].get<double>()};
    if (!(out[0] < out[1]))
        throw config_error(std::string("config: '") + key + "' requires lo < hi");
}

inline void read_parameters(const nlohmann::json& obj, const char* section,
                            Parameters& p) {
    require_keys(obj, section, {"c_c", "c_d", "sigma"});
    read_into(obj, "c_c", p.c_c);
    read_into(obj, "c_d", p.c_d);
    read_into(obj, "sigma", p.sigma);
    try {
        validate(p);
    } catch (const std::invalid_argument& e) {
        throw config_error(std::string("config: ") + section + ": " + e.what());
    }
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    RunConfig cfg;
    detail::require_keys(j, "top level",
                         {"model", "grid", "true_parameters", "initial_guess",
                          "weights", "seed_target_S", "initial", "solver",
                          "shooting", "optimizer", "noise", "sweep", "gradcheck",
                          "observations_csv", "out_dir"});
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::require_keys(m, "model", {"b_over_a", "delta", "beta_hat_a"});
        detail::read_into(m, "b_over_a", cfg.model.b_over_a);
        detail::read_into(m, "delta", cfg.model.delta);
        detail::read_into(m, "beta_hat_a", cfg.model.beta_hat_a);
        try {
            validate(cfg.model);
        } catch (const std::invalid_argument& e) {
            throw config_error(std::string("config: model: ") + e.what());
        }
    }
    if (j.contains("grid")) {
        const auto& m = j.at("grid");
        detail::require_keys(m, "grid", {"n_y", "dt", "n_t"});
        detail::read_into(m, "n_y", cfg.grid.n_y);
        detail::read_into(m, "dt", cfg.grid.dt);
        detail::read_into(m, "n_t", cfg.grid.n_t);
        if (!cfg.grid.valid())
            throw config_error("config: grid requires n_y >= 3, dt > 0, n_t >= 1");
    }
    if (j.contains("true_parameters"))
        detail::read_parameters(j.at("true_parameters"), "true_parameters", cfg.p_true);
    if (j.contains("initial_guess"))
        detail::read_parameters(j.at("initial_guess"), "initial_guess", cfg.p0);
    if (j.contains("weights")) {
        const auto& m = j.at("weights");
        detail::require_keys(m, "weights", {"mu1", "mu2"});
        detail::read_into(m, "mu1", cfg.mu1);
        detail::read_into(m, "mu2", cfg.mu2);
        if (cfg.mu1 < 0.0 || cfg.mu2 < 0.0 || (cfg.mu1 == 0.0 && cfg.mu2 == 0.0))
            throw config_error("config: weights must be nonnegative, not both zero");
    }
    detail::read_into(j, "seed_target_S", cfg.seed_target_S);
    if (!(cfg.seed_target_S >= 1.0))
        throw config_error("config: seed_target_S must be >= 1");
    if (j.contains("initial")) {
        const auto& m = j.at("initial");
        detail::require_keys(m, "initial", {"N0", "S0"});
        cfg.explicit_initial = true;
        detail::read_into(m, "N0", cfg.initial_N0);
        detail::read_into(m, "S0", cfg.initial_S0);
        if (cfg.initial_N0 < 0.0 || cfg.initial_N0 > 1.0 || !(cfg.initial_S0 > 0.0))
            throw config_error("config: initial state requires N0 in [0,1], S0 > 0");
    }
    if (j.contains("solver")) {
        const auto& m = j.at("solver");
        detail::require_keys(m, "solver",
                             {"bvp_tol", "max_bvp_iter", "residual_tol", "max_seed_time"});
        detail::read_into(m, "bvp_tol", cfg.solver.bvp_tol);
        detail::read_into(m, "max_bvp_iter", cfg.solver.max_bvp_iter);
        detail::read_into(m, "residual_tol", cfg.solver.residual_tol);
        detail::read_into(m, "max_seed_time", cfg.solver.max_seed_time);
    }
    if (j.contains("shooting")) {
        const auto& m = j.at("shooting");
        detail::require_keys(m, "shooting",
                             {"epsilon", "root_tol", "bracket", "max_root_iter"});
        detail::read_into(m, "epsilon", cfg.shooting.epsilon);
        detail::read_into(m, "root_tol", cfg.shooting.root_tol);
        if (m.contains("bracket")) {
            std::array<double, 2> br{cfg.shooting.bracket_lo, cfg.shooting.bracket_hi};
            detail::read_box(m, "bracket", br);
            cfg.shooting.bracket_lo = br[0];
            cfg.shooting.bracket_hi = br[1];
        }
        detail::read_into(m, "max_root_iter", cfg.shooting.max_root_iter);
    }
    if (j.contains("optimizer")) {
        const auto& m = j.at("optimizer");
        detail::require_keys(m, "optimizer",
                             {"alpha", "max_iter", "tol_J", "tol_grad", "tol_step", "box"});
        detail::read_into(m, "alpha", cfg.optimizer.alpha);
        detail::read_into(m, "max_iter", cfg.optimizer.max_iter);
        detail::read_into(m, "tol_J", cfg.optimizer.tol_J);
        detail::read_into(m, "tol_grad", cfg.optimizer.tol_grad);
        detail::read_into(m, "tol_step", cfg.optimizer.tol_step);
        if (!(cfg.optimizer.alpha > 0.0) || !(cfg.optimizer.tol_J > 0.0) ||
            !(cfg.optimizer.tol_grad > 0.0) || !(cfg.optimizer.tol_step > 0.0))
            throw config_error("config: optimizer step and tolerances must be > 0");
        if (m.contains("box")) {
            const auto& b = m.at("box");
            detail::require_keys(b, "optimizer.box", {"c_c", "c_d", "sigma"});
            detail::read_box(b, "c_c", cfg.optimizer.box.c_c);
            detail::read_box(b, "c_d", cfg.optimizer.box.c_d);
            detail::read_box(b, "sigma", cfg.optimizer.box.sigma);
        }
    }
    if (j.contains("noise")) {
        const auto& m = j.at("noise");
        detail::require_keys(m, "noise", {"level", "seed", "targets"});
        detail::read_into(m, "level", cfg.noise.level);
        detail::read_into(m, "seed", cfg.noise.seed);
        if (cfg.noise.level < 0.0)
            throw config_error("config: noise level must be >= 0");
        if (m.contains("targets")) {
            cfg.noise.perturb_N = false;
            cfg.noise.perturb_S = false;
            for (const auto& t : m.at("targets")) {
                const std::string name = t.get<std::string>();
                if (name == "N")
                    cfg.noise.perturb_N = true;
                else if (name == "S")
                    cfg.noise.perturb_S = true;
                else
                    throw config_error("config: noise targets must be \"N\" or \"S\"");
            }
        }
    }
    if (j.contains("sweep")) {
        const auto& m = j.at("sweep");
        detail::require_keys(m, "sweep",
                             {"n_c_c", "n_c_d", "range_c_c", "range_c_d", "sigma"});
        detail::read_into(m, "n_c_c", cfg.sweep.n_c_c);
        detail::read_into(m, "n_c_d", cfg.sweep.n_c_d);
        detail::read_box(m, "range_c_c", cfg.sweep.range_c_c);
        detail::read_box(m, "range_c_d", cfg.sweep.range_c_d);
        detail::read_into(m, "sigma", cfg.sweep.sigma);
        if (cfg.sweep.n_c_c < 1 || cfg.sweep.n_c_d < 1)
            throw config_error("config: sweep grid sizes must be >= 1");
    }
    if (j.contains("gradcheck")) {
        const auto& m = j.at("gradcheck");
        detail::require_keys(m, "gradcheck", {"fd_step", "tol", "random_points", "seed"});
        detail::read_into(m, "fd_step", cfg.gradcheck.fd_step);
        detail::read_into(m, "tol", cfg.gradcheck.tol);
        detail::read_into(m, "random_points", cfg.gradcheck.random_points);
        detail::read_into(m, "seed", cfg.gradcheck.seed);
    }
    detail::read_into(j, "observations_csv", cfg.observations_csv);
    detail::read_into(j, "out_dir", cfg.out_dir);
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config: JSON parse error in '" + path + "': " + e.what());
    }
    RunConfig cfg = parse_run_config(j);
    if (!cfg.observations_csv.empty() &&
        !std::filesystem::exists(cfg.observations_csv))
        throw config_error("config: observations_csv path '" + cfg.observations_csv +
                           "' does not exist");
    return cfg;
}

// ---------------------------------------------------------------------------
// CSV / JSON emission
// ---------------------------------------------------------------------------

namespace detail {

/// Round-trip-exact decimal rendering; identical doubles format identically.
inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary); // fixed '\n' line endings
    if (!out) throw config_error("cannot open output file '" + path.string() + "'");
    return out;
}

} // namespace detail

/// Radius series: columns t, S (both dimensionless).
inline void write_radius_csv(const std::filesystem::path& path,
                             const StateTrajectory& traj) {
    auto out = detail::open_out(path);
    out << "t,S\n";
    for (int i = 0; i <= traj.grid.n_t; ++i)
        out << detail::fmt(traj.grid.t(i)) << ',' << detail::fmt(traj.S[i]) << '\n';
}

/// Space-time field in wide form: column t, then one column per node
/// labelled <name>_<j> with 1-based node index j.
inline void write_field_csv(const std::filesystem::path& path, const std::string& name,
                            const SpaceTimeField& field, const Grid& g) {
    auto out = detail::open_out(path);
    out << "t";
    for (int j = 1; j <= g.n_y; ++j) out << ',' << name << '_' << j;
    out << '\n';
    for (int i = 0; i <= g.n_t; ++i) {
        out << detail::fmt(g.t(i));
        for (int j = 0; j < g.n_y; ++j) out << ',' << detail::fmt(field[i][j]);
        out << '\n';
    }
}

/// Observation file: columns t, S_star, N_star_1 .. N_star_{n_y}.
inline void write_observations_csv(const std::filesystem::path& path,
                                   const Observations& obs, const Grid& g) {
    auto out = detail::open_out(path);
    out << "t,S_star";
    for (int j = 1; j <= g.n_y; ++j) out << ",N_star_" << j;
    out << '\n';
    for (int i = 0; i <= g.n_t; ++i) {
        out << detail::fmt(g.t(i)) << ',' << detail::fmt(obs.S_star[i]);
        for (int j = 0; j < g.n_y; ++j) out << ',' << detail::fmt(obs.N_star[i][j]);
        out << '\n';
    }
}

inline Observations read_observations_csv(const std::string& path, const Grid& g,
                                          double mu1, double mu2) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open observations file '" + path + "'");
    Observations obs;
    obs.mu1 = mu1;
    obs.mu2 = mu2;
    std::string line;
    if (!std::getline(in, line))
        throw config_error("observations file '" + path + "' is empty");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (static_cast<int>(values.size()) != 2 + g.n_y)
            throw config_error("observations file '" + path +
                               "': expected t, S_star and " + std::to_string(g.n_y) +
                               " landmark columns");
        obs.S_star.push_back(values[1]);
        obs.N_star.emplace_back(values.begin() + 2, values.end());
    }
    if (static_cast<int>(obs.S_star.size()) != g.n_levels())
        throw config_error("observations file '" + path + "': expected " +
                           std::to_string(g.n_levels()) + " time levels, got " +
                           std::to_string(obs.S_star.size()));
    return obs;
}

/// Optimizer trace: columns k, c_c, c_d, sigma, J, gnorm, step.
inline void write_trace_csv(const std::filesystem::path& path,
                            const std::vector<IterationRecord>& trace) {
    auto out = detail::open_out(path);
    out << "k,c_c,c_d,sigma,J,gnorm,step\n";
    for (const auto& rec : trace) {
        out << rec.k << ',' << detail::fmt(rec.p.c_c) << ',' << detail::fmt(rec.p.c_d)
            << ',' << detail::fmt(rec.p.sigma) << ',' << detail::fmt(rec.J) << ','
            << detail::fmt(rec.grad_norm) << ',' << detail::fmt(rec.step_norm) << '\n';
    }
}

struct SweepRow {
    double c_c, c_d, J;
};

inline void write_sweep_csv(const std::filesystem::path& path,
                            const std::vector<SweepRow>& rows) {
    auto out = detail::open_out(path);
    out << "c_c,c_d,J\n";
    for (const auto& r : rows)
        out << detail::fmt(r.c_c) << ',' << detail::fmt(r.c_d) << ','
            << detail::fmt(r.J) << '\n';
}

inline nlohmann::json to_json(const Parameters& p) {
    return {{"c_c", p.c_c}, {"c_d", p.c_d}, {"sigma", p.sigma}};
}

inline nlohmann::json to_json(const GradientVector& v) {
    return {{"c_c", v.c_c}, {"c_d", v.c_d}, {"sigma", v.sigma}};
}

inline nlohmann::json to_json(const GradCheckReport& rep) {
    return {{"p", to_json(rep.p)},
            {"adjoint_gradient", to_json(rep.adjoint_gradient)},
            {"fd_gradient", to_json(rep.fd_gradient)},
            {"rel_error", rep.rel_error},
            {"fd_step", rep.fd_step},
            {"tolerance", rep.tolerance},
            {"pass", rep.pass}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

/// Multiplier dump for debugging: the three space-time fields, the scalar
/// series, the initial-time profile and the scalar l9.
inline void write_adjoint_csv(const std::filesystem::path& dir,
                              const AdjointTrajectory& adj, const Grid& g) {
    write_field_csv(dir / "lambda1.csv", "l1", adj.l1, g);
    write_field_csv(dir / "lambda2.csv", "l2", adj.l2, g);
    write_field_csv(dir / "lambda3.csv", "l3", adj.l3, g);
    auto out = detail::open_out(dir / "lambda_scalars.csv");
    out << "t,l4,l5,l6,l7\n";
    for (int i = 0; i <= g.n_t; ++i)
        out << detail::fmt(g.t(i)) << ',' << detail::fmt(adj.l4[i]) << ','
            << detail::fmt(adj.l5[i]) << ',' << detail::fmt(adj.l6[i]) << ','
            << detail::fmt(adj.l7[i]) << '\n';
    auto out8 = detail::open_out(dir / "lambda8.csv");
    out8 << "y,l8,l9\n";
    for (int j = 0; j < g.n_y; ++j)
        out8 << detail::fmt(g.y(j)) << ',' << detail::fmt(adj.l8[j]) << ','
             << (j == 0 ? detail::fmt(adj.l9) : std::string()) << '\n';
}

} // namespace spheroid
