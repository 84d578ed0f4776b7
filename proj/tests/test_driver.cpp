#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>

#include "helpers.hpp"
#include "vns/driver.hpp"

using namespace vns;

namespace {
RunConfig small_coupled_config() {
    RunConfig cfg;
    cfg.d = 2;
    cfg.N = 32;
    cfg.L = 2.0 * M_PI;
    cfg.profile = "maxwellian";
    cfg.n_particles = 4000;
    cfg.sampling = "monte_carlo";
    cfg.mass = 0.05;
    cfg.sigma_x = 0.5;
    cfg.sigma_v = 0.4;
    cfg.u0_family = "taylor_green";
    cfg.u0_amplitude = 0.2;
    cfg.dt = 0.02;
    cfg.t_end = 0.5;
    cfg.monitor_loglip = false;
    cfg.out_dir = "/tmp/vns_test_out";
    return cfg;
}
} // namespace

TEST_CASE("config: parses flat key = value text with comments", "[driver]") {
    const std::string text = "# comment\n"
                             "d = 2\n"
                             "N = 32  # trailing note\n"
                             "L = 12.56637061435917\n"
                             "profile = maxwellian\n"
                             "dt = 0.005\n"
                             "t_end = 2\n"
                             "seed = 42\n";
    const RunConfig cfg = parse_config_text(text);
    CHECK(cfg.N == 32);
    CHECK(cfg.profile == "maxwellian");
    CHECK(cfg.seed == 42);

    CHECK_THROWS_AS(parse_config_text("unknown_key = 3\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("dt = fast\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("dt 0.1\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("N = 33\n"), config_error);
    CHECK_THROWS_AS(parse_config_text("cutoff_n = 1e9\n"), config_error);
}

TEST_CASE("initialize: reported data norms match the construction", "[driver]") {
    RunConfig cfg;
    cfg.d = 2;
    cfg.N = 32;
    cfg.u0_family = "taylor_green";
    cfg.u0_amplitude = 0.7;
    cfg.profile = "none";
    RunState st = initialize(cfg);
    CHECK(st.init.E00 ==
          Catch::Approx(0.5 * std::pow(l2_norm(st.fluid.u), 2)).epsilon(1e-13));
    CHECK(st.init.M0 == 0.0);

    // homogeneity of the reported norms in the amplitude
    RunConfig cfg2 = cfg;
    cfg2.u0_amplitude = 1.4;
    RunState st2 = initialize(cfg2);
    CHECK(st2.init.u0_sobolev_half ==
          Catch::Approx(2.0 * st.init.u0_sobolev_half).epsilon(1e-12));
    CHECK(st2.init.u0_besov_neg32 ==
          Catch::Approx(2.0 * st.init.u0_besov_neg32).epsilon(1e-12));

    // maxwellian at rest: E00 is the analytic kinetic energy
    RunConfig cfg3;
    cfg3.d = 2;
    cfg3.N = 32;
    cfg3.L = 24.0;
    cfg3.profile = "maxwellian";
    cfg3.mass = 1.0;
    cfg3.sigma_x = 1.2;
    cfg3.sigma_v = 0.7;
    cfg3.n_particles = 4000;
    RunState st3 = initialize(cfg3);
    CHECK(st3.init.E00_analytic == Catch::Approx(0.5 * 2.0 * 0.7 * 0.7).epsilon(1e-12));
    CHECK(std::abs(st3.init.E00 - st3.init.E00_analytic) / st3.init.E00_analytic < 1e-2);
}

TEST_CASE("reduction: empty kinetic phase reproduces the fluid solver bitwise", "[driver]") {
    RunConfig cfg;
    cfg.d = 2;
    cfg.N = 32;
    cfg.u0_family = "taylor_green";
    cfg.u0_amplitude = 0.6;
    cfg.profile = "none";
    cfg.dt = 0.02;
    RunState st = initialize(cfg);
    FluidState ref;
    ref.u = st.fluid.u;
    for (int s = 0; s < 25; ++s) {
        coupled_step(st, cfg.dt);
        ref = step(ref, cfg.dt, Scheme::if_rk2, st.cutoff);
    }
    REQUIRE(st.fluid.u.coeff.size() == ref.u.coeff.size());
    CHECK(std::memcmp(st.fluid.u.coeff.data(), ref.u.coeff.data(),
                      ref.u.coeff.size() * sizeof(cd)) == 0);
}

TEST_CASE("symmetry: velocity stays numerically zero for balanced beams", "[driver]") {
    RunConfig cfg;
    cfg.d = 2;
    cfg.N = 32;
    cfg.L = 16.0;
    cfg.profile = "two_beam";
    cfg.mass = 0.2;
    cfg.sigma_x = 0.0; // uniform in x: pointwise current cancellation
    cfg.sigma_v = 0.3;
    cfg.v_beam = {0.8, 0.0, 0.0};
    cfg.n_particles = 10000;
    cfg.sampling = "lattice";
    cfg.u0_family = "zero";
    cfg.dt = 0.05;
    RunState st = initialize(cfg);
    double vmax0 = 0.0;
    for (std::size_t i = 0; i < st.ens.n; ++i)
        for (int c = 0; c < 2; ++c) vmax0 = std::max(vmax0, std::abs(st.ens.vel(i)[c]));
    for (int s = 0; s < 40; ++s) coupled_step(st, cfg.dt);
    CHECK(l2_norm(st.fluid.u) < 1e-12);
    double vmax = 0.0;
    for (std::size_t i = 0; i < st.ens.n; ++i)
        for (int c = 0; c < 2; ++c) vmax = std::max(vmax, std::abs(st.ens.vel(i)[c]));
    // pure drag against a ~zero field: velocities contract like e^{-t}
    CHECK(vmax < vmax0 * std::exp(-2.0) * 1.01);
}

TEST_CASE("coupled energy balance at second order", "[driver]") {
    RunConfig cfg = small_coupled_config();
    auto residual = [&](double dt) {
        RunConfig c = cfg;
        c.dt = dt;
        RunState st = initialize(c);
        record_state(st);
        const long n = std::lround(c.t_end / dt);
        for (long s = 1; s <= n; ++s) {
            coupled_step(st, dt);
            record_state(st);
        }
        double worst = 0.0;
        for (const auto& r : st.records)
            worst = std::max(worst, std::abs(r.E0 + r.int_D0 - st.init.E00) / st.init.E00);
        return worst;
    };
    const double r1 = residual(0.02);
    const double r2 = residual(0.01);
    CHECK(r1 < 1e-3);
    CHECK(r1 / r2 > 3.0);
}

TEST_CASE("records: mass exact, budgets monotone, E1 = D0", "[driver]") {
    RunConfig cfg = small_coupled_config();
    RunState st = initialize(cfg);
    const double m0 = st.ens.total_mass();
    record_state(st);
    for (int s = 1; s <= 10; ++s) {
        coupled_step(st, cfg.dt);
        record_state(st);
    }
    CHECK(st.ens.total_mass() == m0);
    for (std::size_t i = 1; i < st.records.size(); ++i) {
        CHECK(st.records[i].lip_budget >= st.records[i - 1].lip_budget);
        CHECK(st.records[i].E1 == st.records[i].D0);
    }
}

TEST_CASE("run: outputs, determinism, exit code", "[driver]") {
    RunConfig cfg = small_coupled_config();
    cfg.t_end = 0.2;
    cfg.record_every = 2;
    cfg.out_dir = "/tmp/vns_test_run_a";
    RunResult a = run(cfg);
    CHECK(a.exit_code == 0);
    CHECK(std::filesystem::exists(cfg.out_dir + "/records.csv"));
    CHECK(std::filesystem::exists(cfg.out_dir + "/summary.json"));
    CHECK(std::filesystem::exists(cfg.out_dir + "/final_u.vnsf"));
    CHECK(std::filesystem::exists(cfg.out_dir + "/final_particles.vnsp"));

    cfg.out_dir = "/tmp/vns_test_run_b";
    RunResult b = run(cfg);
    REQUIRE(a.state.records.size() == b.state.records.size());
    for (std::size_t i = 0; i < a.state.records.size(); ++i) {
        CHECK(a.state.records[i].E0 == b.state.records[i].E0);
        CHECK(a.state.records[i].besov_neg32 == b.state.records[i].besov_neg32);
    }
    // byte-identical record files
    auto slurp = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp("/tmp/vns_test_run_a/records.csv") == slurp("/tmp/vns_test_run_b/records.csv"));
}

TEST_CASE("run: guard trips produce an abort status and a snapshot", "[driver]") {
    RunConfig cfg;
    cfg.d = 2;
    cfg.N = 32;
    cfg.L = 64.0 * M_PI; // advection-dominated: diffusion cannot stabilize
    cfg.u0_family = "random_band";
    cfg.u0_amplitude = 5000.0;
    cfg.profile = "none";
    cfg.dt = 0.5;
    cfg.t_end = 40.0;
    cfg.monitor_loglip = false;
    cfg.out_dir = "/tmp/vns_test_abort";
    RunResult res = run(cfg);
    CHECK(res.exit_code == 3);
    CHECK(res.state.aborted);
    CHECK(std::filesystem::exists(cfg.out_dir + "/lastgood_u.vnsf"));
}

TEST_CASE("twin: zero perturbation is bitwise silent, small ones stay bounded", "[driver]") {
    RunConfig cfg = small_coupled_config();
    cfg.t_end = 0.3;
    TwinResult zero = twin_run(cfg, 0.0, cfg.t_end);
    for (double y : zero.Y) CHECK(y == 0.0);

    TwinResult tw = twin_run(cfg, 1e-4, cfg.t_end);
    CHECK(tw.Y.front() == Catch::Approx(1e-8).epsilon(1e-10));
    for (double y : tw.Y) CHECK(y < 1e-8 * 50.0); // no blow-up over the horizon
}

TEST_CASE("twin: quadratic scaling in the perturbation", "[driver]") {
    RunConfig cfg = small_coupled_config();
    cfg.t_end = 0.5;
    TwinResult t1 = twin_run(cfg, 2e-4, cfg.t_end);
    TwinResult t2 = twin_run(cfg, 1e-4, cfg.t_end);
    const double ratio = t1.Y.back() / t2.Y.back();
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
}

TEST_CASE("picard: contraction on a small problem and split consistency", "[driver]") {
    RunConfig cfg;
    cfg.d = 2;
    cfg.N = 32;
    cfg.L = 2.0 * M_PI;
    cfg.cutoff_n = 4.0;
    cfg.profile = "maxwellian";
    cfg.n_particles = 2000;
    cfg.sampling = "monte_carlo";
    cfg.mass = 0.05;
    cfg.sigma_x = 0.5;
    cfg.sigma_v = 0.4;
    cfg.u0_family = "taylor_green";
    cfg.u0_amplitude = 0.1;
    cfg.dt = 0.002;
    PicardReport rep = picard_local_solve(cfg, 0.0, 1e-12);
    CHECK(rep.T > 0.0);
    CHECK(rep.converged);
    CHECK_FALSE(rep.contraction_failure);
    CHECK(rep.contraction_factor < 0.5);
    CHECK(rep.coupled_gap <= 10.0 * std::max(rep.integrator_error, 1e-12));
}
