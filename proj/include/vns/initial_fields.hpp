#pragma once

#include <cmath>

#include "vns/rng.hpp"
#include "vns/spectral_field.hpp"

namespace vns {

/// Taylor-Green vortex. d=2: amplitude*(sin kx cos ky, -cos kx sin ky) with
/// k = 2*pi*mode/L; under pure Navier-Stokes this decays as exp(-2 k^2 t)
/// exactly. d=3 gives the classical three-component pattern (no closed-form
/// evolution; used as a smooth frozen field).
inline SpectralField taylor_green(const Grid& g, double amplitude, int mode = 1) {
    PhysicalField s(g, g.d);
    const double k = g.k_min() * mode;
    std::array<double, 3> x;
    for (std::size_t i = 0; i < g.points(); ++i) {
        g.coord(i, x);
        if (g.d == 2) {
            s.at(0, i) = amplitude * std::sin(k * x[0]) * std::cos(k * x[1]);
            s.at(1, i) = -amplitude * std::cos(k * x[0]) * std::sin(k * x[1]);
        } else {
            s.at(0, i) = amplitude * std::sin(k * x[0]) * std::cos(k * x[1]) * std::cos(k * x[2]);
            s.at(1, i) = -amplitude * std::cos(k * x[0]) * std::sin(k * x[1]) * std::cos(k * x[2]);
            s.at(2, i) = 0.0;
        }
    }
    SpectralField z = to_spectral(s);
    z.is_solenoidal = true;
    return z;
}

/// Exact pressure of the decaying 2-D Taylor-Green solution at time t
/// (mean-free). For the (sin kx cos ky, -cos kx sin ky) orientation the
/// convection term is grad(-A^2/4 (cos 2kx + cos 2ky)), so
/// P = +A^2/4 (cos 2kx + cos 2ky) exp(-4 k^2 t).
inline SpectralField taylor_green_pressure_2d(const Grid& g, double amplitude, double t,
                                              int mode = 1) {
    PhysicalField s(g, 1);
    const double k = g.k_min() * mode;
    const double f = 0.25 * amplitude * amplitude * std::exp(-4.0 * k * k * t);
    std::array<double, 3> x;
    for (std::size_t i = 0; i < g.points(); ++i) {
        g.coord(i, x);
        s.at(0, i) = f * (std::cos(2.0 * k * x[0]) + std::cos(2.0 * k * x[1]));
    }
    return to_spectral(s);
}

/// Scalar Gaussian bump of prescribed integral `mass`, centered in the box.
inline SpectralField gaussian_blob(const Grid& g, double mass, double sigma) {
    PhysicalField s(g, 1);
    const double c = g.L / 2.0;
    const double amp = mass / std::pow(2.0 * M_PI * sigma * sigma, 0.5 * g.d);
    std::array<double, 3> x;
    for (std::size_t i = 0; i < g.points(); ++i) {
        g.coord(i, x);
        double r2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double dxa = x[a] - c;
            r2 += dxa * dxa;
        }
        s.at(0, i) = amp * std::exp(-0.5 * r2 / (sigma * sigma));
    }
    return to_spectral(s);
}

/// Localized divergence-free velocity: the divergence-free projection of a
/// Gaussian bump pointing along e_1, mean removed. Low shells carry O(1)
/// coefficients, so negative-index shell norms saturate down to k_min.
inline SpectralField solenoidal_blob(const Grid& g, double amplitude, double sigma) {
    SpectralField b(g, g.d);
    const SpectralField bump = gaussian_blob(g, amplitude, sigma);
    const std::size_t n = g.points();
    for (std::size_t i = 0; i < n; ++i) b.at(0, i) = bump.at(0, i);
    SpectralField u = leray_project(b);
    u.remove_mean();
    return u;
}

/// Random band-limited field: independent Gaussian coefficients with radial
/// law (1+|k|/k_min)^{-decay} for 0 < |k| <= k_cut, Hermitian-symmetrized,
/// normalized to unit L^2. Vector fields are projected divergence-free.
inline SpectralField random_band_limited(const Grid& g, int ncomp, double k_cut, Rng& rng,
                                         double decay = 1.0) {
    SpectralField z(g, ncomp);
    const std::size_t n = g.points();
    std::array<double, 3> k;
    for (std::size_t i = 1; i < n; ++i) {
        g.wavevector(i, k);
        const double kk = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        if (kk > k_cut || detail::on_nyquist(g, i)) {
            // keep the stream aligned across masks of the same lattice
            continue;
        }
        const double amp = std::pow(1.0 + kk / g.k_min(), -decay);
        for (int c = 0; c < ncomp; ++c)
            z.at(c, i) = amp * cd(rng.normal(), rng.normal());
    }
    // Hermitian-symmetrize: average with the reflected conjugate.
    std::array<int, 3> idx, ridx;
    for (std::size_t i = 1; i < n; ++i) {
        g.decode(i, idx);
        ridx = {0, 0, 0};
        for (int a = 0; a < g.d; ++a) ridx[a] = (g.N - idx[a]) % g.N;
        const std::size_t ir = g.encode(ridx);
        if (ir < i) continue;
        for (int c = 0; c < ncomp; ++c) {
            const cd v = 0.5 * (z.at(c, i) + std::conj(z.at(c, ir)));
            z.at(c, i) = v;
            z.at(c, ir) = std::conj(v);
            if (ir == i) z.at(c, i) = cd(v.real(), 0.0);
        }
    }
    if (ncomp == g.d) z = leray_project(z);
    z.remove_mean();
    const double nz = l2_norm(z);
    if (nz > 0.0) scale(z, 1.0 / nz);
    return z;
}

/// Single real Fourier mode a*cos(k.x + phase) in component c.
inline SpectralField single_mode(const Grid& g, const std::array<int, 3>& kidx, double a,
                                 int ncomp = 1, int c = 0, double phase = 0.0) {
    SpectralField z(g, ncomp);
    std::array<int, 3> neg = {0, 0, 0};
    for (int ax = 0; ax < g.d; ++ax) neg[ax] = -kidx[ax];
    const std::size_t ip = g.encode(kidx);
    const std::size_t im = g.encode(neg);
    z.at(c, ip) += 0.5 * a * std::polar(1.0, phase);
    z.at(c, im) += 0.5 * a * std::polar(1.0, -phase);
    return z;
}

} // namespace vns
