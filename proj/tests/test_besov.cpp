#include <catch2/catch_amalgamated.hpp>

#include <limits>

#include "helpers.hpp"
#include "vns/besov.hpp"
#include "vns/lorentz.hpp"

using namespace vns;
using testutil::rel_diff;

static constexpr double kInf = std::numeric_limits<double>::infinity();

TEST_CASE("dyadic: single-annulus fields occupy one shell", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    SpectralField z = single_mode(g, {5, 2, 0}, 1.0); // |k| = sqrt(29) in (2^2, 2^3]
    DyadicSpectrum spec = dyadic_decompose(z);
    int nonzero = 0, where = 0;
    for (std::size_t m = 0; m < spec.shell.size(); ++m)
        if (spec.shell[m] > 0.0) {
            ++nonzero;
            where = spec.j_min + static_cast<int>(m);
        }
    CHECK(nonzero == 1);
    CHECK(where == 3);
}

TEST_CASE("dyadic: zero field, zero shells; nonzero mean rejected", "[besov]") {
    Grid g(2, 32, 2.0 * M_PI);
    DyadicSpectrum spec = dyadic_decompose(SpectralField::zeros(g, 1));
    for (double a : spec.shell) CHECK(a == 0.0);

    PhysicalField s(g, 1);
    for (auto& v : s.data) v = 1.0;
    CHECK_THROWS_AS(dyadic_decompose(to_spectral(s)), usage_error);
}

TEST_CASE("dyadic: shell Parseval identity and reconstruction", "[besov]") {
    Grid g(3, 16, 2.0 * M_PI);
    Rng rng(41);
    SpectralField z = random_band_limited(g, 1, g.k_max(), rng);
    DyadicSpectrum spec = dyadic_decompose(z);
    CHECK(std::abs(spec.l2_total() - l2_norm(z)) / l2_norm(z) < 1e-10);

    SpectralField sum = SpectralField::zeros(g, 1);
    for (int j = spec.j_min; j <= spec.j_max(); ++j) axpy(sum, 1.0, shell_filter(z, j));
    CHECK(rel_diff(sum, z) < 1e-10);
}

TEST_CASE("besov_norm: single shell value and summation ordering", "[besov]") {
    DyadicSpectrum spec;
    spec.j_min = -2;
    spec.shell = {0.0, 0.0, 0.7, 0.0}; // single shell at j = 0 with norm 0.7
    for (double r : {1.0, 2.0, kInf})
        CHECK(besov_norm(spec, 1.3, r) == Catch::Approx(0.7).epsilon(1e-14));
    spec.shell = {0.4, 0.0, 0.7, 0.2};
    const double s = -0.5;
    CHECK(besov_norm(spec, s, kInf) <= besov_norm(spec, s, 2.0));
    CHECK(besov_norm(spec, s, 2.0) <= besov_norm(spec, s, 1.0));
    CHECK_THROWS_AS(besov_norm(spec, s, 3.0), usage_error);
}

TEST_CASE("besov_norm: homogeneity and sobolev equivalence band", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    Rng rng(43);
    for (int trial = 0; trial < 20; ++trial) {
        SpectralField z = random_band_limited(g, 1, g.k_max(), rng);
        const double s = -1.5 + trial * 0.15;
        const double n1 = besov_norm(z, s, 2.0);
        SpectralField z3 = z;
        scale(z3, 3.0);
        CHECK(besov_norm(z3, s, 2.0) == Catch::Approx(3.0 * n1).epsilon(1e-12));
        // shell radius vs |k| differ by at most a factor 2: ratio in a fixed band
        const double ratio = n1 / sobolev_norm(z, s);
        CHECK(ratio >= std::pow(2.0, -std::abs(s)) * (1.0 - 1e-12));
        CHECK(ratio <= std::pow(2.0, std::abs(s)) * (1.0 + 1e-12));
    }
}

TEST_CASE("besov_norm: gradient shifts regularity by one within a band", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    Rng rng(47);
    for (double s : {0.5, 1.0, 1.5})
        for (int trial = 0; trial < 10; ++trial) {
            SpectralField z = random_band_limited(g, 1, g.k_max(), rng);
            const double num = besov_norm(derive(z, Deriv::grad), s - 1.0, kInf);
            const double den = besov_norm(z, s, kInf);
            CHECK(num / den > 0.2);
            CHECK(num / den < 4.0);
        }
}

TEST_CASE("chemin-lerner: constant series and one-step quadrature", "[besov]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(53);
    SpectralField z = random_band_limited(g, 1, 8.0, rng);
    std::vector<DyadicSpectrum> series(5, dyadic_decompose(z));
    const double stat = besov_norm(z, 0.5, 1.0);
    CHECK(chemin_lerner_norm(series, 0.1, kInf, 0.5, 1.0) == Catch::Approx(stat).epsilon(1e-13));

    DyadicSpectrum single;
    single.j_min = 2;
    single.shell = {0.9};
    std::vector<DyadicSpectrum> two(2, single);
    const double dt = 0.25;
    for (double rho : {1.0, 2.0})
        CHECK(chemin_lerner_norm(two, dt, rho, -1.0, kInf) ==
              Catch::Approx(std::pow(2.0, -2.0) * 0.9 * std::pow(dt, 1.0 / rho)).epsilon(1e-13));
    CHECK_THROWS_AS(chemin_lerner_norm({}, dt, 1.0, 0.0, 1.0), usage_error);
}

TEST_CASE("chemin-lerner: time norm position follows the summation order", "[besov]") {
    Grid g(2, 32, 2.0 * M_PI);
    Rng rng(59);
    std::vector<DyadicSpectrum> series;
    for (int m = 0; m < 9; ++m)
        series.push_back(dyadic_decompose(random_band_limited(g, 1, g.k_max(), rng)));
    const double dt = 0.05, s = -0.5;
    struct Case {
        double rho, r;
    };
    for (const Case c : {Case{1.0, kInf}, Case{2.0, kInf}, Case{kInf, 1.0}}) {
        const double tilde = chemin_lerner_norm(series, dt, c.rho, s, c.r);
        const double plain = time_lp_besov_norm(series, dt, c.rho, s, c.r);
        if (c.r >= c.rho)
            CHECK(tilde <= plain * (1.0 + 1e-12));
        else
            CHECK(plain <= tilde * (1.0 + 1e-12));
    }
}

TEST_CASE("heat characterization: single-mode maximizer", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    SpectralField z = single_mode(g, {3, 4, 0}, 2.0); // |k| = 5
    const double a = l2_norm(z);
    const double sigma = 1.5;
    const double exact = a * std::pow(sigma / (2.0 * std::exp(1.0) * 25.0), 0.5 * sigma);
    const double got = heat_characterization_norm(z, sigma);
    CHECK(got <= exact * (1.0 + 1e-12));
    CHECK(got >= exact * 0.99); // geometric grid resolves t* to < 1%

    CHECK(heat_characterization_norm(SpectralField::zeros(g, 1), sigma) == 0.0);
    CHECK_THROWS_AS(heat_characterization_norm(z, -1.0), usage_error);
    CHECK_THROWS_AS(heat_characterization_norm(z, 1.0, 2.0), usage_error);
}

TEST_CASE("heat characterization tracks the negative besov norm", "[besov]") {
    Grid g(3, 16, 2.0 * M_PI);
    Rng rng(61);
    double lo = 1e9, hi = 0.0;
    for (int trial = 0; trial < 25; ++trial) {
        SpectralField z = random_band_limited(g, 1, g.k_max(), rng);
        const double ratio = heat_characterization_norm(z, 1.5) / besov_norm(z, -1.5, kInf);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
    }
    CHECK(lo > 0.05);
    CHECK(hi < 20.0);
}

TEST_CASE("lorentz: indicator closed form and Lebesgue agreement", "[besov]") {
    Grid g(2, 32, 2.0);
    PhysicalField s(g, 1);
    const std::size_t cells = 37;
    for (std::size_t i = 0; i < cells; ++i) s.at(0, i) = 1.0;
    const double m = cells * g.cell_volume();
    for (double p : {1.5, 2.0, 3.0})
        CHECK(lorentz_norm(s, p, 1.0) == Catch::Approx(p * std::pow(m, 1.0 / p)).epsilon(1e-12));

    CHECK(lorentz_norm(PhysicalField(g, 1), 3.0, 1.0) == 0.0);

    Rng rng(67);
    PhysicalField r(g, 1);
    for (auto& v : r.data) v = rng.normal();
    CHECK(std::abs(lorentz_norm(r, 2.0, 2.0) - lp_norm(r, 2.0)) / lp_norm(r, 2.0) < 1e-8);
    CHECK(lorentz_norm(r, 3.0, kInf) <= lorentz_norm(r, 3.0, 1.0));
    CHECK_THROWS_AS(lorentz_norm(r, 1.0, 1.0), usage_error);
    CHECK_THROWS_AS(lorentz_norm(r, 0.5, 1.0), usage_error);
}

TEST_CASE("interpolation ratios: single-mode closed form and exponents", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    SpectralField z = single_mode(g, {0, 5, 0}, 1.4); // |k| = 5, shell j = 3
    const double sigma = 1.5;
    InterpolationReport rep = interpolation_check(z, sigma);
    CHECK(rep.theta == Catch::Approx(5.0 / 7.0).epsilon(1e-15));
    CHECK(rep.theta / (1.0 - rep.theta) == Catch::Approx(2.5).epsilon(1e-13));
    const double expect_grad =
        std::pow(5.0, 1.0 - 2.0 * rep.theta) * std::pow(2.0, sigma * 3.0 * (1.0 - rep.theta));
    CHECK(rep.ratio_grad == Catch::Approx(expect_grad).epsilon(1e-12));
    // the chain for the total energy: theta = 3/5 and decay exponent 3/2
    CHECK(0.6 / (1.0 - 0.6) == Catch::Approx(1.5).epsilon(1e-15));
    const double expect_zero = std::pow(5.0, -0.6) * std::pow(2.0, 1.5 * 3.0 * 0.4);
    CHECK(rep.ratio_zero == Catch::Approx(expect_zero).epsilon(1e-12));

    CHECK_THROWS_AS(interpolation_check(SpectralField::zeros(g, 1), 1.5), usage_error);
}

TEST_CASE("embedding: L1 controls the negative besov norm on localized data", "[besov]") {
    Grid g(3, 32, 16.0 * M_PI);
    Rng rng(71);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        SpectralField z = testutil::localized_random(g, rng, 2.0);
        const double ratio = besov_norm(z, -1.5, kInf) / lp_norm(to_physical(z), 1.0);
        worst = std::max(worst, ratio);
    }
    CHECK(worst < 0.35); // fixed constant across the family
}

TEST_CASE("product inequality holds with one constant", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    Rng rng(73);
    const double kcut = g.k_min() * (g.N / 8);
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        SpectralField z1 = random_band_limited(g, 1, kcut, rng);
        SpectralField z2 = random_band_limited(g, 1, kcut, rng);
        PhysicalField p1 = to_physical(z1), p2 = to_physical(z2);
        PhysicalField prod(g, 1);
        for (std::size_t i = 0; i < g.points(); ++i) prod.at(0, i) = p1.at(0, i) * p2.at(0, i);
        SpectralField zp = to_spectral(prod);
        zp.remove_mean();
        for (double s : {0.5, 1.0}) { // s = 1/2 and s = d/2
            const double lhs = besov_norm(zp, s, 1.0);
            const double rhs = besov_norm(z1, 1.0, 1.0) * besov_norm(z2, s, 1.0);
            worst = std::max(worst, lhs / rhs);
        }
    }
    CHECK(worst < 1.0);
}

TEST_CASE("heat flow maximal regularity constant is stable in T", "[besov]") {
    Grid g(2, 64, 2.0 * M_PI);
    Rng rng(79);
    for (double r : {2.0, kInf}) {
        double cmax = 0.0, cmin = 1e9;
        for (double T : {0.1, 1.0, 10.0}) {
            double worst = 0.0;
            for (int trial = 0; trial < 10; ++trial) {
                SpectralField z0 = random_band_limited(g, 1, g.k_max(), rng);
                const double s = -0.5;
                const double lhs = testutil::heat_shellwise_l1_norm(z0, T, s + 2.0, r);
                worst = std::max(worst, lhs / besov_norm(z0, s, r));
            }
            cmax = std::max(cmax, worst);
            cmin = std::min(cmin, worst);
        }
        // energy at a shell's low edge gives int e^{-k^2 t} dt = 1/k^2, so the
        // sharp-shell constant is at most 2^{2j}/k^2 <= 4
        CHECK(cmax < 4.0);
        CHECK(cmax / cmin < 3.0); // stable across horizons
    }
}
