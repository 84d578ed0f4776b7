#pragma once

#include <cmath>
#include <vector>

#include "vns/besov.hpp"
#include "vns/initial_fields.hpp"
#include "vns/spectral_field.hpp"

namespace testutil {

inline double rel_diff(const vns::SpectralField& a, const vns::SpectralField& b) {
    vns::SpectralField d = a;
    vns::axpy(d, -1.0, b);
    const double nb = vns::l2_norm(b);
    return vns::l2_norm(d) / (nb > 0.0 ? nb : 1.0);
}

/// Least-squares slope of log(y) against log(x).
inline double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// || e^{t Lap} z0 ||_{L~1_T(B^{s}_{2,r})} for the source-free heat flow,
/// with the per-shell time integrals evaluated by quadrature on a log grid
/// (dense enough for every shell's own decay scale).
inline double heat_shellwise_l1_norm(const vns::SpectralField& z0, double T, double s, double r) {
    const vns::DyadicSpectrum spec0 = vns::dyadic_decompose(z0);
    const vns::Grid& g = z0.grid;
    const std::size_t n = g.points();
    // per-shell mode lists (k^2, |z_k|^2)
    const int jm = spec0.j_min;
    std::vector<std::vector<std::pair<double, double>>> shells(spec0.shell.size());
    for (std::size_t i = 1; i < n; ++i) {
        const double k2 = g.k_squared(i);
        if (k2 == 0.0) continue;
        const int j = vns::detail::shell_index(std::sqrt(k2));
        double m = 0.0;
        for (int c = 0; c < z0.ncomp; ++c) m += std::norm(z0.at(c, i));
        if (m > 0.0) shells[j - jm].emplace_back(k2, m);
    }
    vns::DyadicSpectrum integrated;
    integrated.j_min = jm;
    integrated.shell.assign(shells.size(), 0.0);
    for (std::size_t m = 0; m < shells.size(); ++m) {
        if (shells[m].empty()) continue;
        auto gj = [&](double t) {
            double acc = 0.0;
            for (const auto& [k2, w] : shells[m]) acc += w * std::exp(-2.0 * k2 * t);
            return std::sqrt(g.volume() * acc);
        };
        // integral over [0, T]: tiny head sliver + log-spaced trapezoid
        const double t0 = T * 1e-8;
        double acc = gj(0.0) * t0;
        const int npts = 600;
        double prev_t = t0, prev_g = gj(t0);
        for (int q = 1; q <= npts; ++q) {
            const double t = t0 * std::pow(T / t0, static_cast<double>(q) / npts);
            const double gq = gj(t);
            acc += 0.5 * (prev_g + gq) * (t - prev_t);
            prev_t = t;
            prev_g = gq;
        }
        integrated.shell[m] = acc;
    }
    return vns::besov_norm(integrated, s, r);
}

/// Localized mean-free scalar field: gaussian envelope times a random
/// band-limited field, mean removed.
inline vns::SpectralField localized_random(const vns::Grid& g, vns::Rng& rng, double k_cut) {
    vns::SpectralField base = vns::random_band_limited(g, 1, k_cut, rng);
    vns::PhysicalField s = vns::to_physical(base);
    const double sigma = g.L / 16.0;
    const double c = g.L / 2.0;
    std::array<double, 3> x;
    for (std::size_t i = 0; i < g.points(); ++i) {
        g.coord(i, x);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) r2 += (x[a] - c) * (x[a] - c);
        s.at(0, i) *= std::exp(-0.5 * r2 / (sigma * sigma));
    }
    vns::SpectralField z = vns::to_spectral(s);
    z.remove_mean();
    return z;
}

} // namespace testutil
