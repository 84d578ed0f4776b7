#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "vns/errors.hpp"
#include "vns/fft.hpp"
#include "vns/grid.hpp"

namespace vns {

using cd = std::complex<double>;

/// Real lattice samples, ncomp components stored component-major.
struct PhysicalField {
    Grid grid;
    int ncomp = 1;
    std::vector<double> data;

    PhysicalField() = default;
    PhysicalField(const Grid& g, int nc) : grid(g), ncomp(nc), data(nc * g.points(), 0.0) {}

    double& at(int c, std::size_t flat) { return data[c * grid.points() + flat]; }
    double at(int c, std::size_t flat) const { return data[c * grid.points() + flat]; }
};

/// Field stored as Fourier coefficients on the grid's wavenumber lattice.
/// Coefficients of real fields satisfy Hermitian symmetry; ops that create
/// fields from real samples preserve it automatically.
struct SpectralField {
    Grid grid;
    int ncomp = 1;
    std::vector<cd> coeff;
    bool is_solenoidal = false;

    SpectralField() = default;
    SpectralField(const Grid& g, int nc) : grid(g), ncomp(nc), coeff(nc * g.points(), cd(0.0)) {}

    static SpectralField zeros(const Grid& g, int nc) { return SpectralField(g, nc); }

    cd& at(int c, std::size_t flat) { return coeff[c * grid.points() + flat]; }
    cd at(int c, std::size_t flat) const { return coeff[c * grid.points() + flat]; }

    bool is_vector() const { return ncomp == grid.d; }

    cd mean(int c = 0) const { return at(c, 0); }

    void remove_mean() {
        for (int c = 0; c < ncomp; ++c) at(c, 0) = cd(0.0);
    }
};

// ---------------------------------------------------------------------------
// Transforms

inline SpectralField to_spectral(const PhysicalField& s) {
    const std::size_t n = s.grid.points();
    if (s.data.size() != static_cast<std::size_t>(s.ncomp) * n)
        throw config_error("to_spectral: sample array does not match grid shape");
    SpectralField z(s.grid, s.ncomp);
    const FftPlan& plan = fft_plan(s.grid);
    std::vector<cd> tmp(n);
    for (int c = 0; c < s.ncomp; ++c) {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = cd(s.at(c, i), 0.0);
        plan.forward(tmp.data(), &z.coeff[c * n]);
    }
    return z;
}

inline PhysicalField to_physical(const SpectralField& z) {
    const std::size_t n = z.grid.points();
    PhysicalField s(z.grid, z.ncomp);
    const FftPlan& plan = fft_plan(z.grid);
    std::vector<cd> tmp(n);
    for (int c = 0; c < z.ncomp; ++c) {
        plan.backward(&z.coeff[c * n], tmp.data());
        for (std::size_t i = 0; i < n; ++i) s.at(c, i) = tmp[i].real();
    }
    return s;
}

// ---------------------------------------------------------------------------
// Projectors and masks

/// Divergence-free projection, multiplier I - k k^T/|k|^2; zero mode passes
/// through unchanged.
inline SpectralField leray_project(const SpectralField& z) {
    if (!z.is_vector()) throw usage_error("leray_project: vector field required");
    SpectralField out = z;
    const std::size_t n = z.grid.points();
    std::array<double, 3> k;
    for (std::size_t i = 1; i < n; ++i) {
        out.grid.wavevector(i, k);
        const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if (k2 == 0.0) continue;
        cd kdotu(0.0);
        for (int c = 0; c < z.grid.d; ++c) kdotu += k[c] * z.at(c, i);
        kdotu /= k2;
        for (int c = 0; c < z.grid.d; ++c) out.at(c, i) -= k[c] * kdotu;
    }
    out.is_solenoidal = true;
    return out;
}

/// Sharp Fourier-ball truncation |k| <= kc composed with the divergence-free
/// projection for vector fields; orthogonal projector on L^2.
inline SpectralField friedrichs_project(const SpectralField& z, double kc) {
    if (!(kc > 0.0)) throw usage_error("friedrichs_project: cutoff must be positive");
    SpectralField out = z;
    const std::size_t n = z.grid.points();
    const double kc2 = kc * kc;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.grid.k_squared(i) > kc2 * (1.0 + 1e-14))
            for (int c = 0; c < z.ncomp; ++c) out.at(c, i) = cd(0.0);
    }
    if (out.is_vector()) out = leray_project(out);
    return out;
}

/// Sharp ball truncation alone (no divergence-free projection).
inline SpectralField ball_truncate(const SpectralField& z, double kc) {
    if (!(kc > 0.0)) throw usage_error("ball_truncate: cutoff must be positive");
    SpectralField out = z;
    const std::size_t n = z.grid.points();
    const double kc2 = kc * kc;
    for (std::size_t i = 0; i < n; ++i) {
        if (out.grid.k_squared(i) > kc2 * (1.0 + 1e-14))
            for (int c = 0; c < z.ncomp; ++c) out.at(c, i) = cd(0.0);
    }
    return out;
}

/// 2/3-rule mask: zero every mode with a per-axis integer frequency above N/3.
inline void dealias(SpectralField& z) {
    const std::size_t n = z.grid.points();
    const int cut = z.grid.dealias_index();
    std::array<int, 3> idx;
    for (std::size_t i = 0; i < n; ++i) {
        z.grid.decode(i, idx);
        bool kill = false;
        for (int a = 0; a < z.grid.d; ++a)
            if (std::abs(z.grid.freq(idx[a])) > cut) kill = true;
        if (kill)
            for (int c = 0; c < z.ncomp; ++c) z.at(c, i) = cd(0.0);
    }
}

// ---------------------------------------------------------------------------
// Differential operators (exact spectral symbols)

enum class Deriv { grad, div, laplacian, hessian };

namespace detail {
/// The N/2 bin has no signed partner, so odd-order symbols zero it to keep
/// the result real.
inline bool on_nyquist(const Grid& g, std::size_t flat) {
    std::array<int, 3> idx;
    g.decode(flat, idx);
    for (int a = 0; a < g.d; ++a)
        if (idx[a] == g.N / 2) return true;
    return false;
}
} // namespace detail

inline SpectralField derive(const SpectralField& z, Deriv order) {
    const Grid& g = z.grid;
    const std::size_t n = g.points();
    std::array<double, 3> k;
    switch (order) {
    case Deriv::grad: {
        SpectralField out(g, z.ncomp * g.d);
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::on_nyquist(g, i)) continue;
            g.wavevector(i, k);
            for (int c = 0; c < z.ncomp; ++c)
                for (int a = 0; a < g.d; ++a)
                    out.at(c * g.d + a, i) = cd(0.0, k[a]) * z.at(c, i);
        }
        return out;
    }
    case Deriv::div: {
        if (!z.is_vector()) throw usage_error("derive: div needs a vector field");
        SpectralField out(g, 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::on_nyquist(g, i)) continue;
            g.wavevector(i, k);
            cd s(0.0);
            for (int a = 0; a < g.d; ++a) s += cd(0.0, k[a]) * z.at(a, i);
            out.at(0, i) = s;
        }
        return out;
    }
    case Deriv::laplacian: {
        SpectralField out(g, z.ncomp);
        for (std::size_t i = 0; i < n; ++i) {
            const double k2 = g.k_squared(i);
            for (int c = 0; c < z.ncomp; ++c) out.at(c, i) = -k2 * z.at(c, i);
        }
        return out;
    }
    case Deriv::hessian: {
        SpectralField out(g, z.ncomp * g.d * g.d);
        for (std::size_t i = 0; i < n; ++i) {
            g.wavevector(i, k);
            for (int c = 0; c < z.ncomp; ++c)
                for (int a = 0; a < g.d; ++a)
                    for (int b = 0; b < g.d; ++b)
                        out.at((c * g.d + a) * g.d + b, i) = -k[a] * k[b] * z.at(c, i);
        }
        return out;
    }
    }
    throw internal_error("derive: unknown order");
}

/// Exact heat semigroup: coefficient at k scaled by exp(-|k|^2 t).
inline SpectralField heat_propagate(const SpectralField& z, double t) {
    if (t < 0.0) throw usage_error("heat_propagate: time must be nonnegative");
    SpectralField out = z;
    const std::size_t n = z.grid.points();
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::exp(-z.grid.k_squared(i) * t);
        for (int c = 0; c < z.ncomp; ++c) out.at(c, i) *= f;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norms

/// Parseval L^2 over all components.
inline double l2_norm(const SpectralField& z) {
    double s = 0.0;
    for (const cd& c : z.coeff) s += std::norm(c);
    return std::sqrt(z.grid.volume() * s);
}

/// L^2 inner product <a,b> = int a.b dx via Parseval.
inline double l2_inner(const SpectralField& a, const SpectralField& b) {
    if (a.grid != b.grid || a.ncomp != b.ncomp)
        throw usage_error("l2_inner: mismatched fields");
    double s = 0.0;
    for (std::size_t i = 0; i < a.coeff.size(); ++i)
        s += a.coeff[i].real() * b.coeff[i].real() + a.coeff[i].imag() * b.coeff[i].imag();
    return a.grid.volume() * s;
}

/// Homogeneous Sobolev seminorm (L^d sum of |k|^{2s}|z_k|^2)^{1/2}; the zero
/// mode is excluded.
inline double sobolev_norm(const SpectralField& z, double s) {
    const std::size_t n = z.grid.points();
    double acc = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double k2 = z.grid.k_squared(i);
        if (k2 == 0.0) continue;
        double m = 0.0;
        for (int c = 0; c < z.ncomp; ++c) m += std::norm(z.at(c, i));
        acc += std::pow(k2, s) * m;
    }
    return std::sqrt(z.grid.volume() * acc);
}

/// Pointwise Euclidean magnitude over components at each node.
inline std::vector<double> pointwise_magnitude(const PhysicalField& s) {
    const std::size_t n = s.grid.points();
    std::vector<double> m(n, 0.0);
    for (int c = 0; c < s.ncomp; ++c)
        for (std::size_t i = 0; i < n; ++i) m[i] += s.at(c, i) * s.at(c, i);
    for (std::size_t i = 0; i < n; ++i) m[i] = std::sqrt(m[i]);
    return m;
}

/// Quadrature L^p norm of the pointwise magnitude.
inline double lp_norm(const PhysicalField& s, double p) {
    if (p < 1.0) throw usage_error("lp_norm: p must be >= 1");
    const auto m = pointwise_magnitude(s);
    double acc = 0.0;
    for (double v : m) acc += std::pow(v, p);
    return std::pow(acc * s.grid.cell_volume(), 1.0 / p);
}

inline double linf_norm(const PhysicalField& s) {
    const auto m = pointwise_magnitude(s);
    double mx = 0.0;
    for (double v : m) mx = std::max(mx, v);
    return mx;
}

struct FieldNorms {
    double L2 = 0.0;        // Parseval value
    double Linf = 0.0;      // max over physical samples (lower bound of sup)
    double grad_Linf = 0.0; // max Frobenius norm of the gradient over samples
};

inline FieldNorms norms(const SpectralField& z) {
    FieldNorms out;
    out.L2 = l2_norm(z);
    out.Linf = linf_norm(to_physical(z));
    out.grad_Linf = linf_norm(to_physical(derive(z, Deriv::grad)));
    return out;
}

/// max_k |k.u_k| / |u_k|, the solenoidality defect.
inline double divergence_defect(const SpectralField& z) {
    if (!z.is_vector()) throw usage_error("divergence_defect: vector field required");
    const std::size_t n = z.grid.points();
    std::array<double, 3> k;
    double worst = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        z.grid.wavevector(i, k);
        cd kd(0.0);
        double m = 0.0;
        for (int c = 0; c < z.grid.d; ++c) {
            kd += k[c] * z.at(c, i);
            m += std::norm(z.at(c, i));
        }
        const double kk = std::sqrt(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
        if (m > 0.0 && kk > 0.0) worst = std::max(worst, std::abs(kd) / (kk * std::sqrt(m)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Small field algebra, used all over the solver

inline void axpy(SpectralField& y, double a, const SpectralField& x) {
    if (y.grid != x.grid || y.ncomp != x.ncomp) throw usage_error("axpy: mismatched fields");
    for (std::size_t i = 0; i < y.coeff.size(); ++i) y.coeff[i] += a * x.coeff[i];
}

inline void scale(SpectralField& y, double a) {
    for (cd& c : y.coeff) c *= a;
}

inline SpectralField lin_comb(double a, const SpectralField& x, double b, const SpectralField& y) {
    SpectralField out = x;
    scale(out, a);
    axpy(out, b, y);
    out.is_solenoidal = x.is_solenoidal && y.is_solenoidal;
    return out;
}

inline bool all_finite(const SpectralField& z) {
    for (const cd& c : z.coeff)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

} // namespace vns
