#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "vns/fluid.hpp"

using namespace vns;
using testutil::rel_diff;

namespace {
SpectralField zero_vec(const Grid& g) { return SpectralField::zeros(g, g.d); }

double ball_cutoff(const Grid& g) { return g.dealias_radius(); }
} // namespace

TEST_CASE("rhs: pseudospectral convection matches a trigonometric oracle", "[fluid]") {
    Grid g(2, 64, 2.0 * M_PI);
    // u = a cos(k1.x) e2 + b sin(k2.x) e1 with k1 = (2,0), k2 = (0,3):
    // divergence free, and u.grad u is a hand-computable trig product
    const double a = 0.7, b = -0.4;
    PhysicalField up(g, 2);
    std::array<double, 3> x;
    for (std::size_t i = 0; i < g.points(); ++i) {
        g.coord(i, x);
        up.at(0, i) = b * std::sin(3.0 * x[1]);
        up.at(1, i) = a * std::cos(2.0 * x[0]);
    }
    SpectralField u = to_spectral(up);
    u.is_solenoidal = true;

    PhysicalField conv_ref(g, 2);
    for (std::size_t i = 0; i < g.points(); ++i) {
        g.coord(i, x);
        // (u.grad)u = u1 d1 u + u2 d2 u; d1 u = (0, -2a sin(2x1)), d2 u = (3b cos(3x2), 0)
        conv_ref.at(0, i) = a * std::cos(2.0 * x[0]) * 3.0 * b * std::cos(3.0 * x[1]);
        conv_ref.at(1, i) = b * std::sin(3.0 * x[1]) * (-2.0 * a * std::sin(2.0 * x[0]));
    }
    SpectralField oracle = to_spectral(conv_ref);
    dealias(oracle);
    CHECK(rel_diff(detail::convection(u), oracle) < 1e-12);

    FluidState st;
    st.u = u;
    const SpectralField& ut = rhs(st, zero_vec(g), ball_cutoff(g));
    SpectralField expect = derive(u, Deriv::laplacian);
    SpectralField nl = oracle;
    scale(nl, -1.0);
    expect = lin_comb(1.0, expect, 1.0, detail::galerkin(nl, ball_cutoff(g)));
    CHECK(rel_diff(ut, expect) < 1e-12);
}

TEST_CASE("rhs: with zero velocity the tendency is the projected source", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(101);
    PhysicalField s(g, 2);
    for (auto& v : s.data) v = rng.normal();
    SpectralField j = to_spectral(s);
    FluidState st;
    st.u = zero_vec(g);
    const SpectralField& ut = rhs(st, j, ball_cutoff(g));
    SpectralField expect = friedrichs_project(j, ball_cutoff(g));
    expect.remove_mean();
    CHECK(rel_diff(ut, expect) < 1e-13);
}

TEST_CASE("rhs: energy production equals minus enstrophy without drag", "[fluid]") {
    Grid g(2, 64, 2.0 * M_PI);
    for (bool tg : {true, false}) {
        Rng rng(tg ? 103 : 107);
        SpectralField u = tg ? taylor_green(g, 0.9)
                             : random_band_limited(g, 2, ball_cutoff(g), rng);
        FluidState st;
        st.u = u;
        const SpectralField& ut = rhs(st, zero_vec(g), ball_cutoff(g));
        const double production = l2_inner(u, ut);
        const double enstrophy = std::pow(sobolev_norm(u, 1.0), 2);
        CHECK(std::abs(production + enstrophy) < 1e-10 * (enstrophy + 1.0));
    }
}

TEST_CASE("step: single transverse mode follows the exact heat decay", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    SpectralField u0 = single_mode(g, {3, 0, 0}, 1.0, 2, 1); // e2-polarized, k=(3,0)
    u0.is_solenoidal = true;
    for (Scheme sch : {Scheme::if_rk2, Scheme::imex_cn}) {
        FluidState st;
        st.u = u0;
        const double dt = 0.05;
        for (int s = 0; s < 20; ++s) st = step(st, dt, sch, ball_cutoff(g));
        SpectralField ref = u0;
        if (sch == Scheme::if_rk2) {
            scale(ref, std::exp(-9.0 * 1.0)); // integrating factor is exact
            CHECK(rel_diff(st.u, ref) < 1e-12);
        } else {
            const double cn = std::pow((1.0 - 4.5 * dt) / (1.0 + 4.5 * dt), 20.0);
            scale(ref, cn);
            CHECK(rel_diff(st.u, ref) < 1e-12);
        }
    }
}

TEST_CASE("step: decaying taylor-green matches the closed form", "[fluid]") {
    Grid g(2, 64, 2.0 * M_PI);
    const double A = 1.0;
    FluidState st;
    st.u = taylor_green(g, A);
    const double dt = 0.01;
    for (int s = 0; s < 100; ++s) st = step(st, dt, Scheme::if_rk2, ball_cutoff(g));
    SpectralField ref = taylor_green(g, A * std::exp(-2.0 * 1.0));
    CHECK(rel_diff(st.u, ref) < 1e-6);
    CHECK(st.u.is_solenoidal);
    CHECK(divergence_defect(st.u) < 1e-12);
}

TEST_CASE("step: second order on a nonlinear trajectory", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(109);
    SpectralField u0 = random_band_limited(g, 2, 6.0, rng);
    scale(u0, 2.0);
    const double T = 0.25;
    auto run = [&](int steps, Scheme sch) {
        FluidState st;
        st.u = u0;
        const double dt = T / steps;
        for (int s = 0; s < steps; ++s) st = step(st, dt, sch, ball_cutoff(g));
        return st.u;
    };
    for (Scheme sch : {Scheme::if_rk2, Scheme::imex_cn}) {
        SpectralField ref = run(512, sch);
        const double e1 = rel_diff(run(16, sch), ref);
        const double e2 = rel_diff(run(32, sch), ref);
        const double order = std::log2(e1 / e2);
        CHECK(order > 1.85);
        CHECK(order < 2.6);
    }
}

TEST_CASE("step: cfl violations warn but do not abort", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    FluidState st;
    st.u = taylor_green(g, 1.0);
    FluidState big = step(st, 0.5, Scheme::if_rk2, ball_cutoff(g));
    CHECK(big.cfl_warning);
    FluidState small = step(st, 0.01, Scheme::if_rk2, ball_cutoff(g));
    CHECK_FALSE(small.cfl_warning);
    CHECK_THROWS_AS(step(st, -0.1, Scheme::if_rk2, ball_cutoff(g)), usage_error);
}

TEST_CASE("step: result stays inside the galerkin ball", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(113);
    SpectralField u0 = random_band_limited(g, 2, g.k_max(), rng);
    const double n = 5.0;
    FluidState st;
    st.u = friedrichs_project(u0, n);
    st.u.remove_mean();
    st = step(st, 0.02, Scheme::if_rk2, n);
    CHECK(rel_diff(ball_truncate(st.u, n), st.u) < 1e-14);
    CHECK(std::abs(st.u.mean(0)) + std::abs(st.u.mean(1)) < 1e-15);
}

TEST_CASE("pressure: recovers the potential of a gradient source", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(127);
    SpectralField phi = random_band_limited(g, 1, 6.0, rng);
    SpectralField b = derive(phi, Deriv::grad);
    FluidState st;
    st.u = zero_vec(g);
    SpectralField P = pressure_solve(st, b, ball_cutoff(g));
    CHECK(rel_diff(P, phi) < 1e-12);
}

TEST_CASE("pressure: taylor-green pressure to high accuracy", "[fluid]") {
    Grid g(2, 64, 2.0 * M_PI);
    const double At = 0.8 * std::exp(-2.0 * 0.3);
    FluidState st;
    st.u = taylor_green(g, At);
    SpectralField P = pressure_solve(st, zero_vec(g), ball_cutoff(g));
    SpectralField ref = taylor_green_pressure_2d(g, At, 0.0);
    SpectralField diff = P;
    axpy(diff, -1.0, ref);
    diff.remove_mean();
    CHECK(l2_norm(diff) < 1e-8 * l2_norm(ref));
}

TEST_CASE("pressure: stationary force balance closes on random states", "[fluid]") {
    Grid g(2, 48, 2.0 * M_PI);
    Rng rng(131);
    for (int trial = 0; trial < 3; ++trial) {
        FluidState st;
        st.u = random_band_limited(g, 2, ball_cutoff(g), rng);
        scale(st.u, 1.5);
        SpectralField b = random_band_limited(g, 2, ball_cutoff(g), rng);
        CHECK(stokes_residual(st, b, ball_cutoff(g)) < 1e-8);
    }
}

TEST_CASE("energy identity at the integrator order without particles", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(137);
    SpectralField u0 = random_band_limited(g, 2, 6.0, rng);
    auto residual = [&](int steps) {
        FluidState st;
        st.u = u0;
        const double T = 0.5, dt = T / steps;
        const double E0 = 0.5 * std::pow(l2_norm(u0), 2);
        double dint = 0.0;
        double prevD = std::pow(sobolev_norm(st.u, 1.0), 2);
        double worst = 0.0;
        for (int s = 0; s < steps; ++s) {
            st = step(st, dt, Scheme::if_rk2, ball_cutoff(g));
            const double D = std::pow(sobolev_norm(st.u, 1.0), 2);
            dint += 0.5 * dt * (prevD + D);
            prevD = D;
            const double E = 0.5 * std::pow(l2_norm(st.u), 2);
            worst = std::max(worst, std::abs(E + dint - E0) / E0);
        }
        return worst;
    };
    const double r1 = residual(100);
    const double r2 = residual(200);
    CHECK(r1 < 5e-3);
    CHECK(r1 / r2 > 3.0); // second-order residual
}

TEST_CASE("duhamel: heat-only histories leave no remainder", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(139);
    SpectralField u0 = random_band_limited(g, 2, 6.0, rng);
    const double dt = 0.05;
    std::vector<SpectralField> uh, sh;
    for (int m = 0; m <= 10; ++m) {
        uh.push_back(heat_propagate(u0, m * dt));
        sh.push_back(zero_vec(g));
    }
    DuhamelSplit split = duhamel_split(uh, sh, u0, dt);
    CHECK(split.source_L43_L2 == 0.0);
    for (const auto& z : split.u_l2) CHECK(l2_norm(z) == 0.0);
    for (const auto& z : split.u_tilde) CHECK(l2_norm(z) < 1e-12);
    CHECK(split.n_tilde.sup_Bhalf21 < 1e-12);
    CHECK_THROWS_AS(duhamel_split({u0}, {zero_vec(g)}, u0, dt), usage_error);
}

TEST_CASE("duhamel: remainder scales quadratically with the data", "[fluid]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(149);
    SpectralField shape = random_band_limited(g, 2, 5.0, rng);
    const double T = 0.4;
    const int steps = 40;
    auto remainder = [&](double amp) {
        SpectralField u0 = shape;
        scale(u0, amp);
        FluidState st;
        st.u = u0;
        std::vector<SpectralField> uh{u0}, sh{zero_vec(g)};
        for (int s = 0; s < steps; ++s) {
            st = step(st, T / steps, Scheme::if_rk2, ball_cutoff(g));
            uh.push_back(st.u);
            sh.push_back(zero_vec(g));
        }
        DuhamelSplit split = duhamel_split(uh, sh, u0, T / steps);
        return split.n_tilde.sup_Bhalf21 / std::pow(sobolev_norm(u0, 0.5), 2);
    };
    const double c1 = remainder(0.2);
    const double c2 = remainder(0.1);
    const double c3 = remainder(0.05);
    const double cmax = std::max({c1, c2, c3});
    const double cmin = std::min({c1, c2, c3});
    CHECK(cmax / cmin < 2.0); // one constant across the three amplitudes
}
