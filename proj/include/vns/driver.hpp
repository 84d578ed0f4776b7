#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vns/config.hpp"
#include "vns/diagnostics.hpp"
#include "vns/fluid.hpp"
#include "vns/initial_fields.hpp"
#include "vns/io.hpp"
#include "vns/particles.hpp"

namespace vns {

using json = nlohmann::json;

inline double kInfR() { return std::numeric_limits<double>::infinity(); }

// ---------------------------------------------------------------------------

struct InitReport {
    double E00 = 0.0, E10 = 0.0;   // discrete initial functionals
    double E00_analytic = 0.0;     // with the profile's closed-form moments
    double u0_l2 = 0.0, u0_h1 = 0.0;
    double u0_besov_neg32 = 0.0, u0_besov_neg12 = 0.0, u0_sobolev_half = 0.0;
    double M0 = 0.0, Nq = 0.0;
    double smallness = 0.0; // ||u0||_{H^1}^2 + int int |v|^2 f0
};

/// Owns the coupled trajectory: fluid state, particles, budgets and the
/// record history.
struct RunState {
    RunConfig cfg;
    Grid grid;
    double cutoff = 0.0;
    double R0 = 1.0;
    FluidState fluid;
    PhysicalField u_phys; // physical view of fluid.u, kept in sync
    ParticleEnsemble ens;
    InitReport init;

    long step_index = 0;
    double cum_D0 = 0.0;
    double prev_D0 = 0.0;
    double lip_budget = 0.0; // int ||grad u||_inf, trapezoid at records
    double u_budget = 0.0;   // int ||u||_inf
    double prev_grad_inf = 0.0, prev_u_inf = 0.0, prev_budget_t = 0.0;

    std::vector<EnergyRecord> records;
    std::vector<double> j_l1_series; // ||j||_{L^1} at records
    std::vector<MomentBoundReport> monitor_reports;
    std::optional<LipschitzChainReport> last_chain;

    // asymptotics accumulators
    SpectralField rho0, j_integral, prev_j;
    double prev_record_t = 0.0;

    // optional Duhamel histories at record cadence
    std::vector<SpectralField> u_hist, s_hist;

    bool aborted = false;
    std::string abort_reason;

    double discrete_D0() const {
        return std::pow(sobolev_norm(fluid.u, 1.0), 2) +
               relative_kinetic_energy(ens, ens.n ? &u_phys : nullptr);
    }
};

inline SpectralField build_initial_velocity(const RunConfig& cfg, const Grid& g, double cutoff) {
    SpectralField u;
    if (cfg.u0_family == "zero" || cfg.u0_amplitude == 0.0) {
        u = SpectralField::zeros(g, g.d);
        u.is_solenoidal = true;
    } else if (cfg.u0_family == "taylor_green") {
        u = taylor_green(g, cfg.u0_amplitude, cfg.u0_mode);
    } else if (cfg.u0_family == "solenoidal_blob") {
        u = solenoidal_blob(g, cfg.u0_amplitude, cfg.u0_sigma);
    } else if (cfg.u0_family == "random_band") {
        Rng rng(cfg.seed ^ 0x5eedf1e1dULL);
        const double kcut = (cfg.u0_kcut > 0.0) ? cfg.u0_kcut : g.dealias_radius();
        u = random_band_limited(g, g.d, kcut, rng);
        scale(u, cfg.u0_amplitude);
    } else {
        throw config_error("unknown u0_family: " + cfg.u0_family);
    }
    u = friedrichs_project(u, cutoff);
    u.remove_mean();
    return u;
}

inline RunState initialize(const RunConfig& cfg) {
    cfg.validate();
    RunState st;
    st.cfg = cfg;
    st.grid = cfg.grid();
    st.cutoff = cfg.cutoff();
    st.fluid.u = build_initial_velocity(cfg, st.grid, st.cutoff);
    st.fluid.t = 0.0;
    st.u_phys = to_physical(st.fluid.u);
    st.ens = sample_initial(cfg.kinetic_profile(), st.grid, cfg.n_particles, cfg.seed,
                            cfg.sampling_method(), cfg.q);
    st.R0 = std::max(1.0, 2.0 * st.ens.constants.f0_L1v_Linfx);

    InitReport& rep = st.init;
    rep.u0_l2 = l2_norm(st.fluid.u);
    const double grad = sobolev_norm(st.fluid.u, 1.0);
    rep.u0_h1 = std::sqrt(rep.u0_l2 * rep.u0_l2 + grad * grad);
    if (rep.u0_l2 > 0.0) {
        rep.u0_besov_neg32 = besov_norm(st.fluid.u, -1.5, kInfR());
        rep.u0_besov_neg12 = besov_norm(st.fluid.u, -0.5, kInfR());
        rep.u0_sobolev_half = sobolev_norm(st.fluid.u, 0.5);
    }
    rep.M0 = st.ens.constants.M0;
    rep.Nq = st.ens.constants.Nq;
    rep.E00 = 0.5 * rep.u0_l2 * rep.u0_l2 + 0.5 * absolute_kinetic_energy(st.ens);
    rep.E00_analytic = 0.5 * rep.u0_l2 * rep.u0_l2 + 0.5 * st.ens.constants.kinetic_energy0;
    rep.E10 = grad * grad + relative_kinetic_energy(st.ens, st.ens.n ? &st.u_phys : nullptr);
    rep.smallness = rep.u0_h1 * rep.u0_h1 + st.ens.constants.kinetic_energy0;

    st.prev_D0 = st.discrete_D0();
    st.prev_grad_inf = linf_norm(to_physical(derive(st.fluid.u, Deriv::grad)));
    st.prev_u_inf = linf_norm(st.u_phys);
    st.rho0 = SpectralField::zeros(st.grid, 1);
    st.j_integral = SpectralField::zeros(st.grid, st.grid.d);
    st.prev_j = SpectralField::zeros(st.grid, st.grid.d);
    return st;
}

/// One Strang-split step: half kinetic advance (fluid frozen), full fluid
/// step with the drag source re-deposited at every stage against the frozen
/// particles, half kinetic advance against the updated fluid.
inline void coupled_step(RunState& st, double dt) {
    if (!(dt > 0.0)) throw usage_error("coupled_step: dt must be positive");
    const bool kinetic = st.ens.n > 0;
    if (kinetic) advance(st.ens, st.grid, &st.u_phys, 0.5 * dt);

    BrinkmanEval be = [&](const SpectralField& ustage) {
        const PhysicalField up = to_physical(ustage);
        return to_spectral(brinkman_deposit(st.ens, st.grid, &up));
    };
    st.fluid = step(st.fluid, dt, st.cfg.time_scheme(), st.cutoff, kinetic ? &be : nullptr);
    if (!all_finite(st.fluid.u))
        throw numerical_error("non-finite velocity at t = " + std::to_string(st.fluid.t));
    st.u_phys = to_physical(st.fluid.u);

    if (kinetic) advance(st.ens, st.grid, &st.u_phys, 0.5 * dt);
    ++st.step_index;

    const double D0 = st.discrete_D0();
    st.cum_D0 += 0.5 * dt * (st.prev_D0 + D0);
    st.prev_D0 = D0;
}

/// Full functional record at the current state; also refreshes the budgets
/// and the asymptotics accumulators.
inline EnergyRecord record_state(RunState& st) {
    const Grid& g = st.grid;
    MomentFields m = deposit(st.ens, g, st.ens.n ? &st.u_phys : nullptr);
    st.fluid.invalidate();
    rhs(st.fluid, m.brinkman, st.cutoff);
    const SpectralField P = pressure_solve(st.fluid, m.brinkman, st.cutoff);

    // budgets by trapezoid between records
    const double grad_inf = linf_norm(to_physical(derive(st.fluid.u, Deriv::grad)));
    const double u_inf = linf_norm(st.u_phys);
    const double gap = st.fluid.t - st.prev_budget_t;
    if (gap > 0.0) {
        st.lip_budget += 0.5 * gap * (st.prev_grad_inf + grad_inf);
        st.u_budget += 0.5 * gap * (st.prev_u_inf + u_inf);
    }
    st.prev_grad_inf = grad_inf;
    st.prev_u_inf = u_inf;
    st.prev_budget_t = st.fluid.t;

    EnergyRecord rec;
    energy_functionals(st.fluid, m, st.ens, st.u_phys, st.R0, P, rec);
    rec.int_D0 = st.cum_D0;
    rec.lip_budget = st.lip_budget;
    if (l2_norm(st.fluid.u) > 0.0) {
        const DyadicSpectrum spec = dyadic_decompose(st.fluid.u);
        rec.besov_neg32 = besov_norm(spec, -1.5, kInfR());
        rec.besov_neg12 = besov_norm(spec, -0.5, kInfR());
        rec.besov_neg_dhalf = besov_norm(spec, -0.5 * g.d, kInfR());
        rec.sobolev_half = sobolev_norm(st.fluid.u, 0.5);
    }
    rec.rho_max = linf_norm(m.rho_phys);
    rec.j_max = linf_norm(m.j_phys);
    rec.m2_max = linf_norm(m.m2_phys);
    const MonokineticMetrics mk = monokinetic_metrics(st.ens, st.u_phys, m);
    rec.w1_bound = mk.w1_bound;
    rec.j_minus_rho_u_L1 = mk.j_minus_rho_u_L1;
    if (st.cfg.monitor_loglip) rec.loglip = loglip_norm(st.u_phys, st.cfg.loglip_eta);
    const double cf0 = st.cfg.c_f0 * st.ens.constants.bracket2_L1v_Linfx;
    const double t = rec.t;
    rec.script_E = 2.0 * (2.0 + cf0) * (t * rec.E1 + 2.0 * rec.E0) + 25.0 * st.R0 * rec.E1 +
                   t * rec.E2;
    rec.script_D = 2.0 * (1.0 + cf0) * rec.D0 + 2.0 * t * rec.D1 + st.R0 * rec.D1 + t * rec.D2;

    st.j_l1_series.push_back(lp_norm(m.j_phys, 1.0));
    if (st.cfg.monitor_moments && st.ens.n)
        st.monitor_reports.push_back(moment_bound_monitor(
            m, st.ens, st.lip_budget, st.u_budget, t, st.cfg.lipschitz_delta, st.init.E00));
    if (st.cfg.monitor_lipschitz_chain)
        st.last_chain = lipschitz_chain_report(st.fluid, m, st.cutoff);

    // asymptotics accumulators
    if (st.records.empty()) {
        st.rho0 = m.rho;
    } else {
        SpectralField mid = lin_comb(0.5, st.prev_j, 0.5, m.j);
        axpy(st.j_integral, t - st.prev_record_t, mid);
    }
    st.prev_j = m.j;
    st.prev_record_t = t;

    st.records.push_back(rec);

    // continuation guards
    if (st.ens.n) {
        const double rho_bound = std::max(st.records.front().rho_max,
                                          2.0 * st.ens.constants.f0_L1v_Linfx);
        if (rec.rho_max > st.cfg.guard_rho_factor * rho_bound)
            throw numerical_error("density guard tripped at t = " + std::to_string(t));
    }
    if (st.init.E00 > 0.0 && rec.E0 > st.init.E00 * (1.0 + st.cfg.guard_energy_slack))
        throw numerical_error("energy guard tripped at t = " + std::to_string(t));

    if (st.cfg.track_duhamel) {
        st.u_hist.push_back(st.fluid.u);
        // momentum source j - rho u, dealiased product
        PhysicalField rho_u(g, g.d);
        for (int c = 0; c < g.d; ++c)
            for (std::size_t i = 0; i < g.points(); ++i)
                rho_u.at(c, i) = m.rho_phys.at(0, i) * st.u_phys.at(c, i);
        SpectralField s = to_spectral(rho_u);
        dealias(s);
        scale(s, -1.0);
        axpy(s, 1.0, m.j);
        st.s_hist.push_back(std::move(s));
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Full experiment

struct RunResult {
    RunState state;
    json summary;
    int exit_code = 0;
};

inline json fit_to_json(const std::vector<double>& t, const std::vector<double>& y, double lo,
                        double hi) {
    json out;
    try {
        const DecayFit fit = decay_fit(t, y, lo, hi);
        out["exponent"] = fit.exponent;
        out["confidence"] = fit.confidence;
        out["samples"] = fit.samples;
    } catch (const std::exception& e) {
        out["error"] = e.what();
    }
    return out;
}

inline json config_echo(const RunConfig& c) {
    json j;
    j["d"] = c.d;
    j["N"] = c.N;
    j["L"] = c.L;
    j["cutoff_n"] = c.cutoff_n;
    j["profile"] = c.profile;
    j["n_particles"] = c.n_particles;
    j["sampling"] = c.sampling;
    j["mass"] = c.mass;
    j["sigma_x"] = c.sigma_x;
    j["sigma_v"] = c.sigma_v;
    j["v_mean"] = {c.v_mean[0], c.v_mean[1], c.v_mean[2]};
    j["v_beam"] = {c.v_beam[0], c.v_beam[1], c.v_beam[2]};
    j["r_x"] = c.r_x;
    j["r_v"] = c.r_v;
    j["q"] = c.q;
    j["u0_family"] = c.u0_family;
    j["u0_amplitude"] = c.u0_amplitude;
    j["u0_sigma"] = c.u0_sigma;
    j["u0_mode"] = c.u0_mode;
    j["u0_kcut"] = c.u0_kcut;
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["scheme"] = c.scheme;
    j["record_every"] = c.record_every;
    j["lipschitz_delta"] = c.lipschitz_delta;
    j["c_f0"] = c.c_f0;
    j["c_picard"] = c.c_picard;
    j["loglip_eta"] = c.loglip_eta;
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    return j;
}

inline void write_snapshots(const RunState& st, const std::string& tag) {
    const std::string base = st.cfg.out_dir + "/" + tag;
    write_field_binary(base + "_u.vnsf", st.fluid.u);
    write_field_ndjson(base + "_u.ndjson", st.fluid.u, st.fluid.t);
    write_particles_binary(base + "_particles.vnsp", st.ens);
    write_particles_ndjson(base + "_particles.ndjson", st.ens);
}

inline double theta_for_E0(int d) { return (d == 3) ? 0.6 : 0.5; }
inline double theta_for_E1(int d) {
    const double sigma = 0.5 * d;
    return (sigma + 1.0) / (sigma + 2.0);
}

inline json lyapunov_to_json(const LyapunovVerdict& v) {
    json out;
    out["C_emp"] = v.C_emp;
    out["N_max"] = v.N_max;
    out["envelope_ok"] = v.envelope_ok;
    out["N_bound_ok"] = v.N_bound_ok;
    out["worst_excess"] = v.worst_excess;
    return out;
}

inline RunResult run(const RunConfig& cfg) {
    RunResult result;
    RunState& st = result.state;
    st = initialize(cfg);
    ensure_directory(cfg.out_dir);
    const long nsteps = static_cast<long>(std::llround(cfg.t_end / cfg.dt));
    record_state(st);
    try {
        for (long s = 1; s <= nsteps; ++s) {
            coupled_step(st, cfg.dt);
            if (s % cfg.record_every == 0 || s == nsteps) record_state(st);
        }
    } catch (const numerical_error& e) {
        st.aborted = true;
        st.abort_reason = e.what();
    }
    write_records_csv(cfg.out_dir + "/records.csv", st.records);
    write_snapshots(st, st.aborted ? "lastgood" : "final");

    json& summary = result.summary;
    summary["config"] = config_echo(cfg);
    summary["aborted"] = st.aborted;
    if (st.aborted) summary["abort_reason"] = st.abort_reason;
    summary["mass_initial"] = st.init.M0;
    summary["mass_final"] = st.ens.total_mass();
    summary["initial"] = {{"E00", st.init.E00},
                          {"E00_analytic", st.init.E00_analytic},
                          {"E10", st.init.E10},
                          {"u0_besov_neg32", st.init.u0_besov_neg32},
                          {"u0_sobolev_half", st.init.u0_sobolev_half},
                          {"Nq", st.init.Nq},
                          {"smallness", st.init.smallness}};

    std::vector<double> ts, e0s, e1s, w1s;
    for (const auto& r : st.records) {
        ts.push_back(r.t);
        e0s.push_back(r.E0);
        e1s.push_back(r.E1);
        w1s.push_back(r.w1_bound);
    }
    const auto [lo, hi] = cfg.fit_window();
    summary["fit_window"] = {lo, hi};
    summary["fits"]["E0"] = fit_to_json(ts, e0s, lo, hi);
    summary["fits"]["E1"] = fit_to_json(ts, e1s, lo, hi);
    summary["fits"]["j_L1"] = fit_to_json(ts, st.j_l1_series, lo, hi);

    // energy balance residual
    double worst_res = 0.0;
    for (const auto& r : st.records)
        if (st.init.E00 > 0.0)
            worst_res = std::max(worst_res,
                                 std::abs(r.E0 + r.int_D0 - st.init.E00) / st.init.E00);
    summary["energy_balance_residual"] = worst_res;
    bool monotone = true;
    for (std::size_t i = 1; i < st.records.size(); ++i)
        if (st.records[i].E0 > st.records[i - 1].E0 * (1.0 + 1e-12)) monotone = false;
    summary["E0_monotone"] = monotone;

    // Nash-style chains: L = E0 with H = D0, and L = E1 with H = D1
    {
        std::vector<double> h0, h1, nn;
        for (const auto& r : st.records) {
            h0.push_back(r.D0);
            h1.push_back(r.D1);
            nn.push_back(r.besov_neg_dhalf);
        }
        try {
            summary["lyapunov"]["E0_chain"] =
                lyapunov_to_json(lyapunov_check(ts, e0s, h0, nn, theta_for_E0(cfg.d)));
            summary["lyapunov"]["E1_chain"] =
                lyapunov_to_json(lyapunov_check(ts, e1s, h1, nn, theta_for_E1(cfg.d)));
        } catch (const std::exception& e) {
            summary["lyapunov"]["error"] = e.what();
        }
    }

    // monokinetic: boundedness of w1 * t^{5/4} over the window (3-D scaling)
    double w1t54 = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i] >= lo && ts[i] <= hi)
            w1t54 = std::max(w1t54, w1s[i] * std::pow(ts[i], 1.25));
    summary["w1_t54_max"] = w1t54;

    // long-time density reconstruction
    if (st.ens.n && st.records.size() > 2 && !st.aborted) {
        double slope = 0.0;
        if (summary["fits"]["j_L1"].contains("exponent"))
            slope = summary["fits"]["j_L1"]["exponent"].get<double>();
        MomentFields mend = deposit(st.ens, st.grid, &st.u_phys);
        const AsymptoticDensity ad =
            asymptotic_density(st.rho0, st.j_integral, mend.rho, st.fluid.t,
                               st.j_l1_series.back(), slope);
        summary["asymptotic_density"] = {{"residual", ad.residual},
                                         {"tail_estimate", ad.tail_estimate},
                                         {"conclusive", ad.conclusive}};
    }

    if (!st.monitor_reports.empty()) {
        int violations = 0;
        for (const auto& rep : st.monitor_reports)
            if (!rep.all_ok()) ++violations;
        summary["monitors"] = {{"reports", st.monitor_reports.size()},
                               {"violations", violations},
                               {"delta", cfg.lipschitz_delta}};
        json last = json::array();
        for (const auto& c : st.monitor_reports.back().checks)
            last.push_back({{"name", c.name},
                            {"value", c.value},
                            {"bound", c.bound},
                            {"applicable", c.applicable},
                            {"ok", c.ok}});
        summary["monitors"]["final"] = last;
    }
    if (st.last_chain) {
        summary["lipschitz_chain"] = {{"ut_Ld1", st.last_chain->ut_Ld1},
                                      {"conv_Ld1", st.last_chain->conv_Ld1},
                                      {"brinkman_Ld1", st.last_chain->brinkman_Ld1},
                                      {"grad_u_inf", st.last_chain->grad_u_inf},
                                      {"gn_ratio", st.last_chain->gn_ratio}};
    }

    if (cfg.track_duhamel && st.u_hist.size() >= 2) {
        const double rec_dt = cfg.dt * cfg.record_every;
        const DuhamelSplit split =
            duhamel_split(st.u_hist, st.s_hist, st.u_hist.front(), rec_dt);
        summary["duhamel"] = {{"tilde_sup_Bhalf21", split.n_tilde.sup_Bhalf21},
                              {"tilde_L2t_B32", split.n_tilde.L2t_B32_21},
                              {"tilde_L1t_B52", split.n_tilde.L1t_B52_21},
                              {"uL1_sup_Hhalf", split.n_l1.sup_Hhalf},
                              {"source_L43_L2", split.source_L43_L2}};
    }

    std::ofstream sf(cfg.out_dir + "/summary.json");
    sf << summary.dump(2) << "\n";
    result.exit_code = st.aborted ? 3 : 0;
    return result;
}

// ---------------------------------------------------------------------------
// Twin-run stability experiment

struct TwinResult {
    std::vector<double> t;
    std::vector<double> Y;    // ||du||^2 + sum w |dZ|^2
    std::vector<double> du2;  // fluid part
    std::vector<double> dz2;  // particle part
};

inline TwinResult twin_run(const RunConfig& cfg, double eps, double horizon) {
    RunState a = initialize(cfg);
    RunState b = initialize(cfg);
    if (a.ens.n != b.ens.n) throw usage_error("twin_run: ensembles must share identities");
    if (eps != 0.0) {
        Rng rng(cfg.seed ^ 0x7e57ab1eULL);
        SpectralField p = random_band_limited(b.grid, b.grid.d, b.cutoff, rng);
        p = friedrichs_project(p, b.cutoff);
        p.remove_mean();
        const double np = l2_norm(p);
        if (np > 0.0) scale(p, eps / np);
        axpy(b.fluid.u, 1.0, p);
        b.fluid.u = friedrichs_project(b.fluid.u, b.cutoff);
        b.fluid.u.remove_mean();
        b.u_phys = to_physical(b.fluid.u);
    }
    TwinResult out;
    const long nsteps = static_cast<long>(std::llround(horizon / cfg.dt));
    auto push = [&]() {
        SpectralField du = a.fluid.u;
        axpy(du, -1.0, b.fluid.u);
        const double du2 = std::pow(l2_norm(du), 2);
        double dz2 = 0.0;
        for (std::size_t i = 0; i < a.ens.n; ++i) {
            for (int c = 0; c < a.grid.d; ++c) {
                const double dx =
                    minimal_image(a.ens.pos(i)[c] - b.ens.pos(i)[c], a.grid.L);
                const double dv = a.ens.vel(i)[c] - b.ens.vel(i)[c];
                dz2 += a.ens.w[i] * (dx * dx + dv * dv);
            }
        }
        out.t.push_back(a.fluid.t);
        out.Y.push_back(du2 + dz2);
        out.du2.push_back(du2);
        out.dz2.push_back(dz2);
    };
    push();
    for (long s = 1; s <= nsteps; ++s) {
        coupled_step(a, cfg.dt);
        coupled_step(b, cfg.dt);
        if (s % cfg.record_every == 0 || s == nsteps) push();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Local fixed-point construction at a fixed spectral cutoff

struct PicardReport {
    double T = 0.0;
    int steps = 0;
    int iterations = 0;
    bool converged = false;
    bool contraction_failure = false;
    std::vector<double> gaps;       // ||w_{m+1} - w_m||_{E_T}
    double contraction_factor = 0.0; // measured geometric ratio
    double coupled_gap = 0.0;        // fixed point vs split trajectory at T
    double integrator_error = 0.0;   // split dt vs dt/2 at T
};

namespace detail {
/// E_T norm: (sup_t ||z||_{L^2}^2 + int_0^T ||grad z||^2 dt)^{1/2}.
inline double trajectory_norm(const std::vector<SpectralField>& traj, double dt) {
    double sup2 = 0.0, diss = 0.0;
    for (std::size_t m = 0; m < traj.size(); ++m) {
        sup2 = std::max(sup2, std::pow(l2_norm(traj[m]), 2));
        const double g2 = std::pow(sobolev_norm(traj[m], 1.0), 2);
        diss += ((m == 0 || m + 1 == traj.size()) ? 0.5 : 1.0) * dt * g2;
    }
    return std::sqrt(sup2 + diss);
}

/// Linear advection tendency J_n(-(w.grad)u + B) for the frozen transport
/// field w (physical samples) and source B.
inline SpectralField linear_tendency(const SpectralField& u, const PhysicalField& w_phys,
                                     const SpectralField& B, double cutoff) {
    const Grid& g = u.grid;
    const PhysicalField gu = to_physical(derive(u, Deriv::grad));
    PhysicalField conv(g, g.d);
    for (int c = 0; c < g.d; ++c)
        for (std::size_t i = 0; i < g.points(); ++i) {
            double s = 0.0;
            for (int a = 0; a < g.d; ++a) s += w_phys.at(a, i) * gu.at(c * g.d + a, i);
            conv.at(c, i) = s;
        }
    SpectralField out = to_spectral(conv);
    dealias(out);
    scale(out, -1.0);
    axpy(out, 1.0, B);
    return galerkin(out, cutoff);
}
} // namespace detail

/// One application of the fixed-point map: transport the particles along w,
/// then solve the linear parabolic problem for the new velocity trajectory.
inline std::vector<SpectralField> picard_map(const Grid& g, double cutoff,
                                             const ParticleEnsemble& ens0,
                                             const std::vector<SpectralField>& w, double dt) {
    const int steps = static_cast<int>(w.size()) - 1;
    std::vector<PhysicalField> w_phys;
    w_phys.reserve(w.size());
    for (const auto& z : w) w_phys.push_back(to_physical(z));

    // drag sources along the w-driven characteristics, at the time nodes
    ParticleEnsemble ens = ens0;
    std::vector<SpectralField> B;
    B.reserve(w.size());
    for (int m = 0; m <= steps; ++m) {
        B.push_back(to_spectral(brinkman_deposit(ens, g, ens.n ? &w_phys[m] : nullptr)));
        if (m < steps && ens.n) {
            advance(ens, g, &w_phys[m], 0.5 * dt);
            advance(ens, g, &w_phys[m + 1], 0.5 * dt);
        }
    }

    std::vector<SpectralField> u;
    u.reserve(w.size());
    u.push_back(w.front()); // shared initial velocity J_n u0
    SpectralField cur = w.front();
    for (int m = 0; m < steps; ++m) {
        const SpectralField n0 = detail::linear_tendency(cur, w_phys[m], B[m], cutoff);
        SpectralField u1 = lin_comb(1.0, cur, dt, n0);
        detail::apply_heat_factor(u1, dt);
        const SpectralField n1 =
            detail::linear_tendency(u1, w_phys[m + 1], B[m + 1], cutoff);
        SpectralField acc = lin_comb(1.0, cur, 0.5 * dt, n0);
        detail::apply_heat_factor(acc, dt);
        axpy(acc, 0.5 * dt, n1);
        cur = detail::galerkin(acc, cutoff);
        u.push_back(cur);
    }
    return u;
}

inline PicardReport picard_local_solve(const RunConfig& cfg, double T_user, double tol = 1e-10,
                                       int max_iter = 50) {
    cfg.validate();
    const Grid g = cfg.grid();
    const double cutoff = cfg.cutoff();
    RunState seed_state = initialize(cfg);
    const ParticleEnsemble& ens0 = seed_state.ens;
    const SpectralField u0 = seed_state.fluid.u;

    PicardReport rep;
    const double kinetic0 = ens0.constants.kinetic_energy0;
    const double M = std::sqrt(2.0 * (1.0 + std::pow(l2_norm(u0), 2) + kinetic0));
    if (T_user > 0.0) {
        rep.T = T_user;
    } else {
        const double C = cfg.c_picard;
        const double f0c = ens0.constants.f0_L1v_Linfx;
        const double n32 = std::pow(cutoff, 1.5);
        double T = std::pow(cfg.lipschitz_delta / (C * n32 * M), 2);
        if (f0c > 0.0) {
            T = std::min(T, std::log(2.0) / f0c);
            T = std::min(T, 1.0 / (f0c * M * M));
        }
        T = std::min(T, 0.99 / (2.0 * C * (f0c + std::pow(cutoff, 3) * M)));
        rep.T = T;
    }
    rep.steps = std::max(8, static_cast<int>(std::lround(rep.T / cfg.dt)));
    const double dt = rep.T / rep.steps;

    // start from the free heat flow of the truncated data
    std::vector<SpectralField> w;
    w.reserve(rep.steps + 1);
    for (int m = 0; m <= rep.steps; ++m) w.push_back(heat_propagate(u0, m * dt));

    double prev_gap = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        std::vector<SpectralField> u = picard_map(g, cutoff, ens0, w, dt);
        std::vector<SpectralField> diff;
        diff.reserve(u.size());
        for (std::size_t m = 0; m < u.size(); ++m) diff.push_back(lin_comb(1.0, u[m], -1.0, w[m]));
        const double gap = detail::trajectory_norm(diff, dt);
        rep.gaps.push_back(gap);
        ++rep.iterations;
        w = std::move(u);
        if (gap < tol * std::max(1.0, M)) {
            rep.converged = true;
            break;
        }
        if (it > 0 && prev_gap > 0.0 && gap > prev_gap) rep.contraction_failure = true;
        prev_gap = gap;
    }
    if (rep.gaps.size() >= 2) {
        double acc = 1.0;
        int n = 0;
        for (std::size_t i = 1; i < rep.gaps.size(); ++i)
            if (rep.gaps[i - 1] > 0.0 && rep.gaps[i] > 0.0) {
                acc *= rep.gaps[i] / rep.gaps[i - 1];
                ++n;
            }
        rep.contraction_factor = (n > 0) ? std::pow(acc, 1.0 / n) : 0.0;
    }
    if (!rep.converged && rep.contraction_factor >= 1.0) rep.contraction_failure = true;

    // cross-validate the fixed point against the split integrator
    auto split_run = [&](double step_dt) {
        RunState st = initialize(cfg);
        const long n = static_cast<long>(std::llround(rep.T / step_dt));
        for (long s = 0; s < n; ++s) coupled_step(st, rep.T / n);
        return st.fluid.u;
    };
    const SpectralField split_T = split_run(dt);
    const SpectralField split_half = split_run(0.5 * dt);
    rep.coupled_gap = l2_norm(lin_comb(1.0, w.back(), -1.0, split_T));
    rep.integrator_error = l2_norm(lin_comb(1.0, split_T, -1.0, split_half));
    return rep;
}

} // namespace vns
