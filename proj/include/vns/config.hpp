#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "vns/errors.hpp"
#include "vns/fluid.hpp"
#include "vns/particles.hpp"

namespace vns {

/// Full experiment description, parsed from a flat `key = value` text file
/// (UTF-8, '#' comments).
struct RunConfig {
    // box and resolution
    int d = 2;
    int N = 64;
    double L = 2.0 * M_PI;
    double cutoff_n = 0.0; // 0: use the dealiasing radius

    // particles
    std::string profile = "none"; // none|maxwellian|bump|two_beam
    std::size_t n_particles = 10000;
    std::string sampling = "lattice"; // lattice|monte_carlo
    double mass = 1.0;
    double sigma_x = 1.0, sigma_v = 1.0;
    std::array<double, 3> v_mean{0.0, 0.0, 0.0};
    std::array<double, 3> v_beam{0.0, 0.0, 0.0};
    double r_x = 1.0, r_v = 1.0;
    double q = 6.0; // velocity-tail exponent for the moment bounds

    // initial velocity
    std::string u0_family = "zero"; // zero|taylor_green|solenoidal_blob|random_band
    double u0_amplitude = 0.0;
    double u0_sigma = 1.0; // blob width
    int u0_mode = 1;       // taylor-green mode
    double u0_kcut = 0.0;  // random band cut (0: dealias radius)

    // time stepping
    double dt = 0.01;
    double t_end = 1.0;
    std::string scheme = "ifrk2";
    int record_every = 1;

    // diagnostics and monitors
    double lipschitz_delta = 0.1;
    double c_f0 = 1.0;
    double c_picard = 1.0;
    double loglip_eta = 0.25;
    bool monitor_moments = true;
    bool monitor_lipschitz_chain = false;
    bool monitor_loglip = true;
    bool track_duhamel = false;
    double fit_t_min = 0.0; // 0: auto window
    double fit_t_max = 0.0;

    // guards
    double guard_rho_factor = 10.0;
    double guard_energy_slack = 1e-2;

    std::uint64_t seed = 1;
    std::string out_dir = "out";

    Grid grid() const { return Grid(d, N, L); }

    double cutoff() const {
        const Grid g = grid();
        if (cutoff_n <= 0.0) return g.dealias_radius();
        if (cutoff_n > g.k_max() * (1.0 + 1e-12))
            throw config_error("cutoff_n exceeds the resolved wavenumber range");
        return cutoff_n;
    }

    KineticProfile kinetic_profile() const {
        KineticProfile p;
        p.family = profile_from_string(profile);
        p.d = d;
        p.mass = mass;
        p.sigma_x = sigma_x;
        p.sigma_v = sigma_v;
        p.v_mean = v_mean;
        p.v_beam = v_beam;
        p.r_x = r_x;
        p.r_v = r_v;
        p.center = {L / 2.0, L / 2.0, L / 2.0};
        p.box_L = L;
        return p;
    }

    SamplingMethod sampling_method() const {
        if (sampling == "lattice") return SamplingMethod::lattice;
        if (sampling == "monte_carlo") return SamplingMethod::monte_carlo;
        throw config_error("unknown sampling method: " + sampling);
    }

    Scheme time_scheme() const { return scheme_from_string(scheme); }

    /// Pre-finite-size fit window: periodic images matter past ~(L/2pi)^2.
    std::pair<double, double> fit_window() const {
        if (fit_t_min > 0.0 && fit_t_max > 0.0) return {fit_t_min, fit_t_max};
        const double horizon = std::pow(L / (2.0 * M_PI), 2) / 4.0;
        return {1.0, std::min(horizon, t_end)};
    }

    void validate() const {
        grid(); // throws on bad d/N/L
        if (!(dt > 0.0)) throw config_error("dt must be positive");
        if (!(t_end > 0.0)) throw config_error("t_end must be positive");
        if (record_every < 1) throw config_error("record_every must be >= 1");
        if (!(lipschitz_delta > 0.0)) throw config_error("lipschitz_delta must be positive");
        if (!(q > static_cast<double>(d)))
            throw config_error("q must exceed the dimension for the tail bounds");
        (void)cutoff();
        (void)sampling_method();
        (void)time_scheme();
        profile_from_string(profile);
        if (u0_family != "zero" && u0_family != "taylor_green" &&
            u0_family != "solenoidal_blob" && u0_family != "random_band")
            throw config_error("unknown u0_family: " + u0_family);
    }
};

namespace detail {
inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw config_error("boolean expected for " + key + ", got '" + v + "'");
}

inline double parse_double(const std::string& v, const std::string& key) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw config_error("number expected for " + key + ", got '" + v + "'");
    }
    if (used != v.size()) throw config_error("trailing junk in value for " + key);
    return out;
}

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}
} // namespace detail

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_bool;
    using detail::parse_double;
    auto as_int = [&](const std::string& v) { return static_cast<int>(parse_double(v, key)); };
    if (key == "d") cfg.d = as_int(value);
    else if (key == "N") cfg.N = as_int(value);
    else if (key == "L") cfg.L = parse_double(value, key);
    else if (key == "cutoff_n") cfg.cutoff_n = parse_double(value, key);
    else if (key == "profile") cfg.profile = value;
    else if (key == "n_particles") cfg.n_particles = static_cast<std::size_t>(parse_double(value, key));
    else if (key == "sampling") cfg.sampling = value;
    else if (key == "mass") cfg.mass = parse_double(value, key);
    else if (key == "sigma_x") cfg.sigma_x = parse_double(value, key);
    else if (key == "sigma_v") cfg.sigma_v = parse_double(value, key);
    else if (key == "v_mean_x") cfg.v_mean[0] = parse_double(value, key);
    else if (key == "v_mean_y") cfg.v_mean[1] = parse_double(value, key);
    else if (key == "v_mean_z") cfg.v_mean[2] = parse_double(value, key);
    else if (key == "v_beam_x") cfg.v_beam[0] = parse_double(value, key);
    else if (key == "v_beam_y") cfg.v_beam[1] = parse_double(value, key);
    else if (key == "v_beam_z") cfg.v_beam[2] = parse_double(value, key);
    else if (key == "r_x") cfg.r_x = parse_double(value, key);
    else if (key == "r_v") cfg.r_v = parse_double(value, key);
    else if (key == "q") cfg.q = parse_double(value, key);
    else if (key == "u0_family") cfg.u0_family = value;
    else if (key == "u0_amplitude") cfg.u0_amplitude = parse_double(value, key);
    else if (key == "u0_sigma") cfg.u0_sigma = parse_double(value, key);
    else if (key == "u0_mode") cfg.u0_mode = as_int(value);
    else if (key == "u0_kcut") cfg.u0_kcut = parse_double(value, key);
    else if (key == "dt") cfg.dt = parse_double(value, key);
    else if (key == "t_end") cfg.t_end = parse_double(value, key);
    else if (key == "scheme") cfg.scheme = value;
    else if (key == "record_every") cfg.record_every = as_int(value);
    else if (key == "lipschitz_delta") cfg.lipschitz_delta = parse_double(value, key);
    else if (key == "c_f0") cfg.c_f0 = parse_double(value, key);
    else if (key == "c_picard") cfg.c_picard = parse_double(value, key);
    else if (key == "loglip_eta") cfg.loglip_eta = parse_double(value, key);
    else if (key == "monitor_moments") cfg.monitor_moments = parse_bool(value, key);
    else if (key == "monitor_lipschitz_chain") cfg.monitor_lipschitz_chain = parse_bool(value, key);
    else if (key == "monitor_loglip") cfg.monitor_loglip = parse_bool(value, key);
    else if (key == "track_duhamel") cfg.track_duhamel = parse_bool(value, key);
    else if (key == "fit_t_min") cfg.fit_t_min = parse_double(value, key);
    else if (key == "fit_t_max") cfg.fit_t_max = parse_double(value, key);
    else if (key == "guard_rho_factor") cfg.guard_rho_factor = parse_double(value, key);
    else if (key == "guard_energy_slack") cfg.guard_energy_slack = parse_double(value, key);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_double(value, key));
    else if (key == "out_dir") cfg.out_dir = value;
    else throw config_error("unknown config key: " + key);
}

inline RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error("line " + std::to_string(lineno) + ": empty key or value");
        apply_config_entry(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

} // namespace vns
