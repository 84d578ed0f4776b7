#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "vns/spectral_field.hpp"

namespace vns {

/// Per-shell L^2 norms ||Delta_j z||, sharp annular cutoffs
/// 2^{j-1} < |k| <= 2^j on the discrete lattice. Sharp shells make the
/// partition of unity and the Parseval shell identity exact.
struct DyadicSpectrum {
    int j_min = 0;
    std::vector<double> shell; // shell[m] = ||Delta_{j_min+m} z||_{L^2}

    int j_max() const { return j_min + static_cast<int>(shell.size()) - 1; }

    double shell_norm(int j) const {
        const int m = j - j_min;
        if (m < 0 || m >= static_cast<int>(shell.size())) return 0.0;
        return shell[m];
    }

    double l2_total() const {
        double s = 0.0;
        for (double a : shell) s += a * a;
        return std::sqrt(s);
    }
};

namespace detail {
inline int shell_index(double kk) {
    // 2^{j-1} < |k| <= 2^j  =>  j = ceil(log2 |k|), guarded against round-off
    return static_cast<int>(std::ceil(std::log2(kk) - 1e-9));
}
} // namespace detail

inline int grid_shell_min(const Grid& g) { return detail::shell_index(g.k_min()); }
inline int grid_shell_max(const Grid& g) {
    return detail::shell_index(g.k_max() * std::sqrt(static_cast<double>(g.d)));
}

/// Split z into dyadic shells. Requires zero mean (homogeneous norms on the
/// box are ill-defined otherwise).
inline DyadicSpectrum dyadic_decompose(const SpectralField& z) {
    for (int c = 0; c < z.ncomp; ++c)
        if (std::abs(z.mean(c)) > 1e-13 * (1.0 + l2_norm(z)))
            throw usage_error("dyadic_decompose: field must have zero mean");
    DyadicSpectrum spec;
    spec.j_min = grid_shell_min(z.grid);
    spec.shell.assign(grid_shell_max(z.grid) - spec.j_min + 1, 0.0);
    const std::size_t n = z.grid.points();
    for (std::size_t i = 1; i < n; ++i) {
        const double k2 = z.grid.k_squared(i);
        if (k2 == 0.0) continue;
        const int j = detail::shell_index(std::sqrt(k2));
        double m = 0.0;
        for (int c = 0; c < z.ncomp; ++c) m += std::norm(z.at(c, i));
        spec.shell[j - spec.j_min] += m;
    }
    for (double& a : spec.shell) a = std::sqrt(z.grid.volume() * a);
    return spec;
}

/// The field restricted to shell j (for reconstruction checks).
inline SpectralField shell_filter(const SpectralField& z, int j) {
    SpectralField out(z.grid, z.ncomp);
    const std::size_t n = z.grid.points();
    for (std::size_t i = 1; i < n; ++i) {
        const double k2 = z.grid.k_squared(i);
        if (k2 == 0.0) continue;
        if (detail::shell_index(std::sqrt(k2)) != j) continue;
        for (int c = 0; c < z.ncomp; ++c) out.at(c, i) = z.at(c, i);
    }
    return out;
}

/// || 2^{js} ||Delta_j z|| ||_{l^r}, r in {1, 2, inf}.
inline double besov_norm(const DyadicSpectrum& spec, double s, double r) {
    const bool rinf = std::isinf(r);
    if (!rinf && r != 1.0 && r != 2.0)
        throw usage_error("besov_norm: summation exponent must be 1, 2 or inf");
    double acc = 0.0;
    for (std::size_t m = 0; m < spec.shell.size(); ++m) {
        const int j = spec.j_min + static_cast<int>(m);
        const double w = std::pow(2.0, j * s) * spec.shell[m];
        if (rinf)
            acc = std::max(acc, w);
        else
            acc += (r == 1.0) ? w : w * w;
    }
    if (rinf) return acc;
    return (r == 1.0) ? acc : std::sqrt(acc);
}

inline double besov_norm(const SpectralField& z, double s, double r) {
    return besov_norm(dyadic_decompose(z), s, r);
}

/// Time-integrated norm with the time norm inside the shell sum:
/// || 2^{js} || ||Delta_j z(.)||_{L^2} ||_{L^rho(0,T)} ||_{l^r}.
/// Uniform samples, trapezoid quadrature.
inline double chemin_lerner_norm(const std::vector<DyadicSpectrum>& series, double dt,
                                 double rho, double s, double r) {
    if (series.empty()) throw usage_error("chemin_lerner_norm: empty series");
    const int j_min = series.front().j_min;
    const std::size_t nsh = series.front().shell.size();
    const std::size_t nt = series.size();
    const bool rhoinf = std::isinf(rho);
    DyadicSpectrum time_norms;
    time_norms.j_min = j_min;
    time_norms.shell.assign(nsh, 0.0);
    for (std::size_t m = 0; m < nsh; ++m) {
        if (rhoinf) {
            double mx = 0.0;
            for (const auto& sp : series) mx = std::max(mx, sp.shell[m]);
            time_norms.shell[m] = mx;
        } else {
            double acc = 0.0;
            for (std::size_t q = 0; q < nt; ++q) {
                const double w = (q == 0 || q + 1 == nt) ? 0.5 * dt : dt;
                acc += w * std::pow(series[q].shell[m], rho);
            }
            time_norms.shell[m] = std::pow(acc, 1.0 / rho);
        }
    }
    return besov_norm(time_norms, s, r);
}

/// Companion with the time norm outside: || || z(t) ||_{B^s_{2,r}} ||_{L^rho(0,T)}.
inline double time_lp_besov_norm(const std::vector<DyadicSpectrum>& series, double dt,
                                 double rho, double s, double r) {
    if (series.empty()) throw usage_error("time_lp_besov_norm: empty series");
    if (std::isinf(rho)) {
        double mx = 0.0;
        for (const auto& sp : series) mx = std::max(mx, besov_norm(sp, s, r));
        return mx;
    }
    double acc = 0.0;
    const std::size_t nt = series.size();
    for (std::size_t q = 0; q < nt; ++q) {
        const double w = (q == 0 || q + 1 == nt) ? 0.5 * dt : dt;
        acc += w * std::pow(besov_norm(series[q], s, r), rho);
    }
    return std::pow(acc, 1.0 / rho);
}

/// Heat-flow characterization of negative regularity:
/// sup_t t^{sigma/2} ||e^{t Lap} z||_{L^2}, sup over a geometric grid with
/// 8 points per octave between 1/k_max^2 and 1/k_min^2. The grid resolves
/// the per-mode maximizer t* = sigma/(2|k|^2) to < 5%.
inline double heat_characterization_norm(const SpectralField& z, double sigma,
                                         double r = std::numeric_limits<double>::infinity()) {
    if (!(sigma > 0.0)) throw usage_error("heat_characterization_norm: sigma must be positive");
    if (!std::isinf(r)) throw usage_error("heat_characterization_norm: only r = inf supported");
    for (int c = 0; c < z.ncomp; ++c)
        if (std::abs(z.mean(c)) > 1e-13 * (1.0 + l2_norm(z)))
            throw usage_error("heat_characterization_norm: field must have zero mean");
    const Grid& g = z.grid;
    const std::size_t n = g.points();
    // gather |z_k|^2 against |k|^2 once
    std::vector<double> k2s, ms;
    k2s.reserve(n);
    ms.reserve(n);
    for (std::size_t i = 1; i < n; ++i) {
        const double k2 = g.k_squared(i);
        if (k2 == 0.0) continue;
        double m = 0.0;
        for (int c = 0; c < z.ncomp; ++c) m += std::norm(z.at(c, i));
        if (m > 0.0) {
            k2s.push_back(k2);
            ms.push_back(m);
        }
    }
    const double t_min = 1.0 / (g.k_max() * g.k_max());
    const double t_max = 1.0 / (g.k_min() * g.k_min());
    const int octaves = static_cast<int>(std::ceil(std::log2(t_max / t_min)));
    double best = 0.0;
    for (int m8 = 0; m8 <= 8 * octaves; ++m8) {
        const double t = t_min * std::pow(2.0, m8 / 8.0);
        double s = 0.0;
        for (std::size_t q = 0; q < k2s.size(); ++q) s += ms[q] * std::exp(-2.0 * k2s[q] * t);
        best = std::max(best, std::pow(t, 0.5 * sigma) * std::sqrt(g.volume() * s));
    }
    return best;
}

/// Ratios probing the gradient interpolation chain. theta = (sigma+1)/(sigma+2);
/// callers assert boundedness of the ratios across a sample family.
struct InterpolationReport {
    double theta = 0.0;
    double ratio_grad = 0.0; // ||grad z|| / (||grad^2 z||^theta ||z||_{B^{-sigma}_{2,inf}}^{1-theta})
    double ratio_zero = 0.0; // ||z|| / (||grad z||^{3/5} ||z||_{B^{-3/2}_{2,inf}}^{2/5})
};

inline InterpolationReport interpolation_check(const SpectralField& z, double sigma) {
    const double l2 = l2_norm(z);
    if (l2 == 0.0) throw usage_error("interpolation_check: ratio undefined for the zero field");
    for (int c = 0; c < z.ncomp; ++c)
        if (std::abs(z.mean(c)) > 1e-13 * (1.0 + l2))
            throw usage_error("interpolation_check: field must have zero mean");
    InterpolationReport rep;
    rep.theta = (sigma + 1.0) / (sigma + 2.0);
    const DyadicSpectrum spec = dyadic_decompose(z);
    const double h1 = sobolev_norm(z, 1.0);
    const double h2 = sobolev_norm(z, 2.0);
    const double bs = besov_norm(spec, -sigma, std::numeric_limits<double>::infinity());
    const double b32 = besov_norm(spec, -1.5, std::numeric_limits<double>::infinity());
    rep.ratio_grad = h1 / (std::pow(h2, rep.theta) * std::pow(bs, 1.0 - rep.theta));
    rep.ratio_zero = l2 / (std::pow(h1, 0.6) * std::pow(b32, 0.4));
    return rep;
}

} // namespace vns
