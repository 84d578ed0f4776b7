#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vns/besov.hpp"
#include "vns/rng.hpp"
#include "vns/spectral_field.hpp"

namespace vns {

inline double wrap_position(double x, double L) {
    double y = x - L * std::floor(x / L);
    if (y >= L) y -= L; // guard against floor round-off at the boundary
    return y;
}

inline double minimal_image(double dx, double L) { return dx - L * std::round(dx / L); }

// ---------------------------------------------------------------------------
// Analytic initial phase-space profiles f0(x,v) = mass * phi(x) * psi(v),
// with phi and psi normalized to unit integral over R^d.

enum class ProfileFamily { none, maxwellian, bump, two_beam };

inline ProfileFamily profile_from_string(const std::string& s) {
    if (s == "none") return ProfileFamily::none;
    if (s == "maxwellian") return ProfileFamily::maxwellian;
    if (s == "bump") return ProfileFamily::bump;
    if (s == "two_beam") return ProfileFamily::two_beam;
    throw config_error("unknown particle profile family: " + s);
}

struct KineticProfile {
    ProfileFamily family = ProfileFamily::none;
    int d = 3;
    double mass = 1.0;
    double sigma_x = 1.0;                     // spatial Gaussian width; <= 0: uniform in x
    double sigma_v = 1.0;                     // velocity Gaussian width
    std::array<double, 3> v_mean{0.0, 0.0, 0.0};
    std::array<double, 3> v_beam{0.0, 0.0, 0.0}; // two_beam: +/- v_beam
    double r_x = 1.0, r_v = 1.0;              // bump support radii
    std::array<double, 3> center{0.0, 0.0, 0.0}; // spatial center (box coords)
    double box_L = 0.0; // needed by the uniform-in-x variant

    bool empty() const { return family == ProfileFamily::none || mass == 0.0; }
    bool uniform_x() const { return family != ProfileFamily::bump && sigma_x <= 0.0; }
};

namespace detail {

// smooth compactly supported bump b(s) = exp(-1/(1-s^2)), s in [0,1)
inline double bump_shape(double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

/// Simpson quadrature of f on [a,b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * ((i % 2) ? 4.0 : 2.0);
    return s * h / 3.0;
}

inline double sphere_area(int d) { return (d == 2) ? 2.0 * M_PI : 4.0 * M_PI; }

/// Normalization of the radial bump of radius r in dimension d.
inline double bump_radial_mass(int d, double r) {
    const double unit = simpson(
        [d](double s) { return std::pow(s, d - 1) * bump_shape(s); }, 0.0, 1.0, 4096);
    return sphere_area(d) * unit * std::pow(r, d);
}

/// int_{R^d} <v>^{-q} dv, used as the constant in the moment tail bounds.
inline double angle_bracket_integral(int d, double q) {
    // substitute r = s/(1-s)
    auto f = [d, q](double s) {
        if (s >= 1.0) return 0.0;
        const double r = s / (1.0 - s);
        const double jac = 1.0 / ((1.0 - s) * (1.0 - s));
        return std::pow(r, d - 1) * std::pow(1.0 + r * r, -0.5 * q) * jac;
    };
    return sphere_area(d) * simpson(f, 0.0, 1.0 - 1e-9, 20000);
}

} // namespace detail

/// Spatial factor phi(x), unit integral (over the box for the uniform
/// variant, over R^d otherwise); x given in box coordinates.
inline double profile_phi(const KineticProfile& p, const std::array<double, 3>& x) {
    if (p.uniform_x()) {
        if (!(p.box_L > 0.0)) throw config_error("uniform profile needs the box size");
        return std::pow(p.box_L, -p.d);
    }
    double r2 = 0.0;
    for (int a = 0; a < p.d; ++a) {
        const double dxa = x[a] - p.center[a];
        r2 += dxa * dxa;
    }
    if (p.family == ProfileFamily::bump) {
        const double s = std::sqrt(r2) / p.r_x;
        return detail::bump_shape(s) / detail::bump_radial_mass(p.d, p.r_x);
    }
    const double s2 = p.sigma_x * p.sigma_x;
    return std::exp(-0.5 * r2 / s2) / std::pow(2.0 * M_PI * s2, 0.5 * p.d);
}

/// Velocity factor psi(v), unit integral over R^d.
inline double profile_psi(const KineticProfile& p, const std::array<double, 3>& v) {
    const double s2 = p.sigma_v * p.sigma_v;
    const double gnorm = std::pow(2.0 * M_PI * s2, 0.5 * p.d);
    auto gauss = [&](const std::array<double, 3>& m) {
        double r2 = 0.0;
        for (int a = 0; a < p.d; ++a) {
            const double dv = v[a] - m[a];
            r2 += dv * dv;
        }
        return std::exp(-0.5 * r2 / s2) / gnorm;
    };
    switch (p.family) {
    case ProfileFamily::maxwellian:
        return gauss(p.v_mean);
    case ProfileFamily::two_beam: {
        std::array<double, 3> minus{0.0, 0.0, 0.0};
        for (int a = 0; a < p.d; ++a) minus[a] = -p.v_beam[a];
        return 0.5 * (gauss(p.v_beam) + gauss(minus));
    }
    case ProfileFamily::bump: {
        double r2 = 0.0;
        for (int a = 0; a < p.d; ++a) {
            const double dv = v[a] - p.v_mean[a];
            r2 += dv * dv;
        }
        return detail::bump_shape(std::sqrt(r2) / p.r_v) / detail::bump_radial_mass(p.d, p.r_v);
    }
    default:
        return 0.0;
    }
}

inline double profile_f0(const KineticProfile& p, const std::array<double, 3>& x,
                         const std::array<double, 3>& v) {
    if (p.empty()) return 0.0;
    return p.mass * profile_phi(p, x) * profile_psi(p, v);
}

/// sup_x phi(x).
inline double profile_phi_sup(const KineticProfile& p) {
    if (p.uniform_x()) return std::pow(p.box_L, -p.d);
    if (p.family == ProfileFamily::bump)
        return detail::bump_shape(0.0) / detail::bump_radial_mass(p.d, p.r_x);
    return std::pow(2.0 * M_PI * p.sigma_x * p.sigma_x, -0.5 * p.d);
}

/// Second moment int |v|^2 psi dv.
inline double profile_velocity_m2(const KineticProfile& p) {
    double mean2 = 0.0;
    switch (p.family) {
    case ProfileFamily::maxwellian:
        for (int a = 0; a < p.d; ++a) mean2 += p.v_mean[a] * p.v_mean[a];
        return p.d * p.sigma_v * p.sigma_v + mean2;
    case ProfileFamily::two_beam:
        for (int a = 0; a < p.d; ++a) mean2 += p.v_beam[a] * p.v_beam[a];
        return p.d * p.sigma_v * p.sigma_v + mean2;
    case ProfileFamily::bump: {
        for (int a = 0; a < p.d; ++a) mean2 += p.v_mean[a] * p.v_mean[a];
        const double unit2 = detail::simpson(
            [&](double s) { return std::pow(s, p.d + 1) * detail::bump_shape(s); }, 0.0, 1.0,
            4096);
        const double unit0 = detail::simpson(
            [&](double s) { return std::pow(s, p.d - 1) * detail::bump_shape(s); }, 0.0, 1.0,
            4096);
        return mean2 + p.r_v * p.r_v * unit2 / unit0;
    }
    default:
        return 0.0;
    }
}

/// sup_v <v>^q psi(v) by bracketed 1-d maximization over |v| along the ray
/// through the profile's velocity offset.
inline double profile_psi_weighted_sup(const KineticProfile& p, double q) {
    std::array<double, 3> dir{0.0, 0.0, 0.0};
    double off = 0.0;
    const auto& shift = (p.family == ProfileFamily::two_beam) ? p.v_beam : p.v_mean;
    for (int a = 0; a < p.d; ++a) off += shift[a] * shift[a];
    off = std::sqrt(off);
    if (off > 0.0)
        for (int a = 0; a < p.d; ++a) dir[a] = shift[a] / off;
    else
        dir[0] = 1.0;
    auto value = [&](double r) {
        std::array<double, 3> v{0.0, 0.0, 0.0};
        for (int a = 0; a < p.d; ++a) v[a] = r * dir[a];
        return std::pow(1.0 + r * r, 0.5 * q) * profile_psi(p, v);
    };
    // coarse scan then golden-section refinement
    const double hi = off + ((p.family == ProfileFamily::bump) ? p.r_v : p.sigma_v) *
                                (std::sqrt(2.0 * q) + 4.0);
    double best_r = 0.0, best = value(0.0);
    const int scan = 4000;
    for (int i = 1; i <= scan; ++i) {
        const double r = hi * i / scan;
        const double f = value(r);
        if (f > best) {
            best = f;
            best_r = r;
        }
    }
    double a = std::max(0.0, best_r - hi / scan), b = std::min(hi, best_r + hi / scan);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = value(x1);
        }
    }
    return std::max(best, std::max(f1, f2));
}

/// Derived data used by monitors and the driver; all from the analytic
/// profile, never from samples.
struct ProfileConstants {
    double M0 = 0.0;               // total mass
    double f0_L1v_Linfx = 0.0;     // ||f0||_{L^1_v L^inf_x}
    double v2f0_L1v_Linfx = 0.0;   // || |v|^2 f0 ||_{L^1_v L^inf_x}
    double bracket2_L1v_Linfx = 0.0; // || <v>^2 f0 ||
    double kinetic_energy0 = 0.0;  // int int |v|^2 f0
    double Nq = 0.0;               // sup <v>^q f0
    double q = 6.0;
};

inline ProfileConstants profile_constants(const KineticProfile& p, double q) {
    ProfileConstants c;
    c.q = q;
    if (p.empty()) return c;
    const double phis = profile_phi_sup(p);
    const double m2 = profile_velocity_m2(p);
    c.M0 = p.mass;
    c.f0_L1v_Linfx = p.mass * phis;
    c.v2f0_L1v_Linfx = p.mass * phis * m2;
    c.bracket2_L1v_Linfx = p.mass * phis * (1.0 + m2);
    c.kinetic_energy0 = p.mass * m2;
    c.Nq = p.mass * phis * profile_psi_weighted_sup(p, q);
    return c;
}

// ---------------------------------------------------------------------------
// Cloud-in-cell kernel, identical for deposit and interpolation so the
// discrete drag work identity is exact.

struct CicStencil {
    std::size_t corner[8];
    double weight[8];
    int count;
};

inline CicStencil cic_stencil(const Grid& g, const double* x) {
    CicStencil st;
    st.count = 1 << g.d;
    int base[3] = {0, 0, 0};
    double frac[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < g.d; ++a) {
        const double s = wrap_position(x[a], g.L) / g.dx();
        double fl = std::floor(s);
        base[a] = static_cast<int>(fl);
        frac[a] = s - fl;
        if (base[a] >= g.N) { // s == N after wrap round-off
            base[a] = 0;
            frac[a] = 0.0;
        }
    }
    for (int c = 0; c < st.count; ++c) {
        std::array<int, 3> idx = {0, 0, 0};
        double w = 1.0;
        for (int a = 0; a < g.d; ++a) {
            const int bit = (c >> a) & 1;
            idx[a] = (base[a] + bit) % g.N;
            w *= bit ? frac[a] : (1.0 - frac[a]);
        }
        st.corner[c] = g.encode(idx);
        st.weight[c] = w;
    }
    return st;
}

inline void interp_cic(const PhysicalField& f, const double* x, double* out) {
    const CicStencil st = cic_stencil(f.grid, x);
    for (int c = 0; c < f.ncomp; ++c) {
        double v = 0.0;
        for (int q = 0; q < st.count; ++q) v += st.weight[q] * f.at(c, st.corner[q]);
        out[c] = v;
    }
}

// ---------------------------------------------------------------------------

/// Weighted particles (X_i, V_i, w_i) representing f, plus the analytic
/// initial profile for reconstruction and bound checks. Weights never change
/// after sampling.
struct ParticleEnsemble {
    int d = 3;
    std::size_t n = 0;
    std::vector<double> x, v, w; // x,v: n*d interleaved per particle
    std::vector<double> x0, v0; // initial phase-space records
    KineticProfile profile;
    ProfileConstants constants;

    double* pos(std::size_t i) { return &x[i * d]; }
    const double* pos(std::size_t i) const { return &x[i * d]; }
    double* vel(std::size_t i) { return &v[i * d]; }
    const double* vel(std::size_t i) const { return &v[i * d]; }

    double total_mass() const {
        double s = 0.0;
        for (double wi : w) s += wi;
        return s;
    }
};

enum class SamplingMethod { lattice, monte_carlo };

/// Deterministic phase-space lattice quadrature (midpoint rule) or seeded
/// importance sampling. Lattice counts round the request down to a tensor
/// grid m^(2d).
inline ParticleEnsemble sample_initial(const KineticProfile& profile, const Grid& grid,
                                       std::size_t n_particles, std::uint64_t seed,
                                       SamplingMethod method = SamplingMethod::lattice,
                                       double q = 6.0) {
    ParticleEnsemble ens;
    ens.d = grid.d;
    ens.profile = profile;
    ens.profile.d = grid.d;
    ens.profile.box_L = grid.L;
    ens.constants = profile_constants(ens.profile, q);
    if (ens.profile.empty()) return ens;
    if (n_particles < 1000) throw config_error("sample_initial: need at least 1e3 particles");

    const KineticProfile& p = ens.profile;
    const double vcut = (p.family == ProfileFamily::bump) ? p.r_v : 4.5 * p.sigma_v;
    const double xcut = (p.family == ProfileFamily::bump) ? p.r_x : 4.5 * p.sigma_x;
    std::array<double, 3> voff = (p.family == ProfileFamily::two_beam)
                                     ? std::array<double, 3>{0.0, 0.0, 0.0}
                                     : p.v_mean;
    double vspan = vcut;
    if (p.family == ProfileFamily::two_beam) {
        double vb = 0.0;
        for (int a = 0; a < p.d; ++a) vb = std::max(vb, std::abs(p.v_beam[a]));
        vspan = vb + vcut;
    }
    if (!p.uniform_x() && 2.0 * xcut > grid.L)
        throw config_error("sample_initial: spatial support exceeds the box");

    if (method == SamplingMethod::lattice) {
        // Uniform-in-x data sit on a grid-aligned lattice so that kernel sums
        // are translation invariant; localized data use a tensor box around
        // the support.
        int mx, mv;
        if (p.uniform_x()) {
            mx = grid.N;
            const double per_site =
                static_cast<double>(n_particles) / grid.points();
            mv = std::max(2, static_cast<int>(std::lround(std::pow(per_site, 1.0 / grid.d))));
        } else {
            mx = mv = std::max(
                3, static_cast<int>(std::floor(std::pow(static_cast<double>(n_particles),
                                                        1.0 / (2.0 * grid.d)) + 1e-9)));
        }
        const double hx = p.uniform_x() ? grid.dx() : 2.0 * xcut / mx;
        const double hv = 2.0 * vspan / mv;
        std::array<double, 3> xx{0.0, 0.0, 0.0}, vv{0.0, 0.0, 0.0};
        std::array<int, 3> ix{0, 0, 0}, iv{0, 0, 0};
        const std::size_t mxd = static_cast<std::size_t>(std::pow(mx, grid.d));
        const std::size_t mvd = static_cast<std::size_t>(std::pow(mv, grid.d));
        const double cellw = std::pow(hx, grid.d) * std::pow(hv, grid.d);
        for (std::size_t ax = 0; ax < mxd; ++ax) {
            std::size_t rest = ax;
            for (int a = grid.d - 1; a >= 0; --a) {
                ix[a] = static_cast<int>(rest % mx);
                rest /= mx;
            }
            for (int a = 0; a < grid.d; ++a)
                xx[a] = p.uniform_x() ? (ix[a] + 0.5) * hx
                                      : p.center[a] - xcut + (ix[a] + 0.5) * hx;
            const double phi = profile_phi(ens.profile, xx);
            if (phi == 0.0) continue;
            for (std::size_t av = 0; av < mvd; ++av) {
                std::size_t rv = av;
                for (int a = grid.d - 1; a >= 0; --a) {
                    iv[a] = static_cast<int>(rv % mv);
                    rv /= mv;
                }
                for (int a = 0; a < grid.d; ++a)
                    vv[a] = voff[a] - vspan + (iv[a] + 0.5) * hv;
                const double f0 = p.mass * phi * profile_psi(p, vv);
                if (f0 == 0.0) continue;
                for (int a = 0; a < grid.d; ++a) {
                    ens.x.push_back(wrap_position(xx[a], grid.L));
                    ens.v.push_back(vv[a]);
                }
                ens.w.push_back(f0 * cellw);
            }
        }
        ens.n = ens.w.size();
    } else {
        Rng rng(seed);
        ens.n = n_particles;
        ens.x.resize(ens.n * grid.d);
        ens.v.resize(ens.n * grid.d);
        ens.w.assign(ens.n, p.mass / static_cast<double>(n_particles));
        auto draw_radial_bump = [&](double radius, double* out, const double* shift) {
            // rejection inside the support ball; acceptance ~ b(s)/b(0)
            while (true) {
                double y[3] = {0.0, 0.0, 0.0};
                double r2 = 0.0;
                for (int a = 0; a < grid.d; ++a) {
                    y[a] = rng.uniform(-1.0, 1.0);
                    r2 += y[a] * y[a];
                }
                if (r2 > 1.0) continue;
                if (rng.uniform() * detail::bump_shape(0.0) > detail::bump_shape(std::sqrt(r2)))
                    continue;
                for (int a = 0; a < grid.d; ++a) out[a] = shift[a] + radius * y[a];
                return;
            }
        };
        for (std::size_t i = 0; i < ens.n; ++i) {
            double* X = &ens.x[i * grid.d];
            double* V = &ens.v[i * grid.d];
            if (p.family == ProfileFamily::bump) {
                draw_radial_bump(p.r_x, X, p.center.data());
                draw_radial_bump(p.r_v, V, p.v_mean.data());
            } else {
                for (int a = 0; a < grid.d; ++a)
                    X[a] = p.uniform_x() ? rng.uniform(0.0, grid.L)
                                         : p.center[a] + p.sigma_x * rng.normal();
                std::array<double, 3> off = p.v_mean;
                if (p.family == ProfileFamily::two_beam) {
                    const double sgn = (rng.uniform() < 0.5) ? 1.0 : -1.0;
                    for (int a = 0; a < grid.d; ++a) off[a] = sgn * p.v_beam[a];
                }
                for (int a = 0; a < grid.d; ++a)
                    V[a] = off[a] + p.sigma_v * rng.normal();
            }
            for (int a = 0; a < grid.d; ++a) X[a] = wrap_position(X[a], grid.L);
        }
    }
    ens.x0 = ens.x;
    ens.v0 = ens.v;
    return ens;
}

// ---------------------------------------------------------------------------
// Characteristic integration. The drag is integrated exactly; the transport
// field is evaluated at a half-step predictor position, which keeps second
// order in dt and exactness for spatially constant fields.

namespace detail {
struct DragCoeffs {
    double decay;  // e^{-dt}
    double gain;   // 1 - e^{-dt}
    double drift;  // dt - 1 + e^{-dt}
};
inline DragCoeffs drag_coeffs(double dt) {
    DragCoeffs c;
    c.decay = std::exp(-dt);
    c.gain = -std::expm1(-dt);
    if (dt < 1e-4)
        c.drift = dt * dt * (0.5 - dt / 6.0 + dt * dt / 24.0);
    else
        c.drift = dt - c.gain;
    return c;
}

/// One exact-drag step of a single phase point under a frozen field.
inline void drag_step(const Grid& g, const PhysicalField* u, double dt, double* X, double* V) {
    const DragCoeffs full = drag_coeffs(dt);
    double a[3] = {0.0, 0.0, 0.0};
    double ustar[3] = {0.0, 0.0, 0.0};
    if (u) {
        const DragCoeffs half = drag_coeffs(0.5 * dt);
        interp_cic(*u, X, a);
        double Xh[3];
        for (int c = 0; c < g.d; ++c)
            Xh[c] = X[c] + half.gain * V[c] + half.drift * a[c];
        interp_cic(*u, Xh, ustar);
    }
    for (int c = 0; c < g.d; ++c) {
        const double Vc = V[c];
        V[c] = full.decay * Vc + full.gain * ustar[c];
        X[c] = wrap_position(X[c] + full.gain * Vc + full.drift * ustar[c], g.L);
    }
}
} // namespace detail

/// Advance every particle by dt with the fluid field frozen. Pass u = nullptr
/// for pure drag (u = 0).
inline void advance(ParticleEnsemble& ens, const Grid& grid, const PhysicalField* u, double dt) {
    if (!(dt > 0.0)) throw usage_error("advance: dt must be positive");
    for (std::size_t i = 0; i < ens.n; ++i)
        detail::drag_step(grid, u, dt, ens.pos(i), ens.vel(i));
}

// ---------------------------------------------------------------------------
// Flow Jacobian probes: centered finite differences of the phase-space flow
// map around probe points. Phase volume contracts at rate d, so the
// determinant over elapsed time t is e^{-d t} for exact integration.

struct FlowProbe {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    std::array<double, 3> v{0.0, 0.0, 0.0};
};

inline double determinant(std::vector<double>& a, int n) {
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int piv = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        if (piv != col) {
            for (int c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
            det = -det;
        }
        const double p = a[col * n + col];
        if (p == 0.0) return 0.0;
        det *= p;
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / p;
            for (int c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
        }
    }
    return det;
}

inline std::vector<double> flow_jacobian_probe(const Grid& grid, const PhysicalField* u,
                                               const std::vector<FlowProbe>& probes,
                                               double t_elapsed, int substeps, double h) {
    if (substeps < 1) throw usage_error("flow_jacobian_probe: need at least one substep");
    if (!(h > 0.0) || h > grid.L / 4.0)
        throw internal_error("flow_jacobian_probe: stencil step incompatible with the box");
    const int d = grid.d;
    const int m = 2 * d;
    const double dt = t_elapsed / substeps;
    std::vector<double> dets;
    dets.reserve(probes.size());
    auto integrate = [&](std::array<double, 6> z) {
        double X[3] = {z[0], z[1], z[2]};
        double V[3] = {z[3], z[4], z[5]};
        if (t_elapsed > 0.0)
            for (int s = 0; s < substeps; ++s) detail::drag_step(grid, u, dt, X, V);
        return std::array<double, 6>{X[0], X[1], X[2], V[0], V[1], V[2]};
    };
    for (const FlowProbe& p : probes) {
        std::array<double, 6> z0{p.x[0], p.x[1], p.x[2], p.v[0], p.v[1], p.v[2]};
        auto seed_coord = [&](int a) -> int { return (a < d) ? a : 3 + (a - d); };
        std::vector<double> jac(m * m, 0.0);
        for (int a = 0; a < m; ++a) {
            std::array<double, 6> zp = z0, zm = z0;
            zp[seed_coord(a)] += h;
            zm[seed_coord(a)] -= h;
            const auto fp = integrate(zp);
            const auto fm = integrate(zm);
            for (int b = 0; b < m; ++b) {
                const int cb = seed_coord(b);
                double diff = fp[cb] - fm[cb];
                if (b < d) diff = minimal_image(diff, grid.L);
                jac[b * m + a] = diff / (2.0 * h);
            }
        }
        dets.push_back(determinant(jac, m));
    }
    return dets;
}

// ---------------------------------------------------------------------------
// Moment deposition

struct MomentFields {
    PhysicalField rho_phys, j_phys, m2_phys, brinkman_phys;
    SpectralField rho, j, m2, brinkman;
};

/// Deposit one particle quantity (ncomp values per particle) with the CIC
/// kernel; fields integrate to sum_i w_i q_i.
inline void deposit_cic(PhysicalField& f, const Grid& g, const double* x, const double* q,
                        double w) {
    const CicStencil st = cic_stencil(g, x);
    const double inv_vol = 1.0 / g.cell_volume();
    for (int c = 0; c < f.ncomp; ++c)
        for (int k = 0; k < st.count; ++k)
            f.at(c, st.corner[k]) += w * q[c] * st.weight[k] * inv_vol;
}

/// Deposit of w_i (V_i - u(X_i)) only (the drag source seen by the fluid).
inline PhysicalField brinkman_deposit(const ParticleEnsemble& ens, const Grid& grid,
                                      const PhysicalField* u) {
    PhysicalField b(grid, grid.d);
    double q[3], uat[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < ens.n; ++i) {
        if (u) interp_cic(*u, ens.pos(i), uat);
        for (int c = 0; c < grid.d; ++c) q[c] = ens.vel(i)[c] - uat[c];
        deposit_cic(b, grid, ens.pos(i), q, ens.w[i]);
    }
    return b;
}

/// Full moment set rho, j, m2 and the drag source; an empty ensemble yields
/// zero fields (the system then reduces to pure Navier-Stokes).
inline MomentFields deposit(const ParticleEnsemble& ens, const Grid& grid,
                            const PhysicalField* u) {
    MomentFields m;
    m.rho_phys = PhysicalField(grid, 1);
    m.j_phys = PhysicalField(grid, grid.d);
    m.m2_phys = PhysicalField(grid, 1);
    m.brinkman_phys = PhysicalField(grid, grid.d);
    double one = 1.0, vsq, q[3], uat[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < ens.n; ++i) {
        const double* V = ens.vel(i);
        if (u) interp_cic(*u, ens.pos(i), uat);
        vsq = 0.0;
        for (int c = 0; c < grid.d; ++c) {
            q[c] = V[c] - uat[c];
            vsq += V[c] * V[c];
        }
        deposit_cic(m.rho_phys, grid, ens.pos(i), &one, ens.w[i]);
        deposit_cic(m.j_phys, grid, ens.pos(i), V, ens.w[i]);
        deposit_cic(m.m2_phys, grid, ens.pos(i), &vsq, ens.w[i]);
        deposit_cic(m.brinkman_phys, grid, ens.pos(i), q, ens.w[i]);
    }
    m.rho = to_spectral(m.rho_phys);
    m.j = to_spectral(m.j_phys);
    m.m2 = to_spectral(m.m2_phys);
    m.brinkman = to_spectral(m.brinkman_phys);
    return m;
}

/// sum_i w_i |V_i - u(X_i)|^2, the kinetic part of the dissipation.
inline double relative_kinetic_energy(const ParticleEnsemble& ens, const PhysicalField* u) {
    double s = 0.0, uat[3] = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < ens.n; ++i) {
        if (u) interp_cic(*u, ens.pos(i), uat);
        const double* V = ens.vel(i);
        double r2 = 0.0;
        for (int c = 0; c < ens.d; ++c) {
            const double dv = V[c] - uat[c];
            r2 += dv * dv;
        }
        s += ens.w[i] * r2;
    }
    return s;
}

/// sum_i w_i |V_i|^2.
inline double absolute_kinetic_energy(const ParticleEnsemble& ens) {
    double s = 0.0;
    for (std::size_t i = 0; i < ens.n; ++i) {
        const double* V = ens.vel(i);
        double r2 = 0.0;
        for (int c = 0; c < ens.d; ++c) r2 += V[c] * V[c];
        s += ens.w[i] * r2;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Moment bound monitors. These report margins, never abort. The measured
// sup is kernel-smoothed, hence the 5% slack on each bound.

struct BoundCheck {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    bool applicable = false;
    bool ok = true;

    double margin() const { return bound > 0.0 ? value / bound : 0.0; }
};

struct MomentBoundReport {
    std::vector<BoundCheck> checks;
    double delta_used = 0.0;
    bool all_ok() const {
        for (const auto& c : checks)
            if (c.applicable && !c.ok) return false;
        return true;
    }
};

/// lip_budget = int_0^t ||grad u||_inf; u_budget = int_0^t ||u||_inf;
/// E00 = initial total energy (for the m2 data bound).
inline MomentBoundReport moment_bound_monitor(const MomentFields& m, const ParticleEnsemble& ens,
                                              double lip_budget, double u_budget, double t,
                                              double delta, double E00) {
    constexpr double slack = 1.05;
    const int d = ens.d;
    const ProfileConstants& pc = ens.constants;
    MomentBoundReport rep;
    rep.delta_used = delta;
    const double rho_inf = linf_norm(m.rho_phys);
    const double j_inf = linf_norm(m.j_phys);
    const double m2_inf = linf_norm(m.m2_phys);
    const double growth = std::exp(d * t);
    const double budget_pow = 1.0 + u_budget;

    BoundCheck density;
    density.name = "density_factor2";
    density.value = rho_inf;
    density.bound = 2.0 * pc.f0_L1v_Linfx * slack;
    density.applicable = (lip_budget <= delta) && pc.M0 > 0.0;
    density.ok = density.value <= density.bound;
    rep.checks.push_back(density);

    auto tail_bound = [&](const char* name, double value, double qq, double Nqq) {
        BoundCheck b;
        b.name = name;
        b.value = value;
        b.bound = detail::angle_bracket_integral(d, qq) * growth * std::pow(budget_pow, qq) *
                  Nqq * slack;
        b.applicable = pc.M0 > 0.0 && qq > d;
        b.ok = b.value <= b.bound;
        return b;
    };
    const double q = pc.q;
    const double Nq1 = pc.M0 > 0.0
                           ? ens.profile.mass * profile_phi_sup(ens.profile) *
                                 profile_psi_weighted_sup(ens.profile, q + 1.0)
                           : 0.0;
    const double Nq2 = pc.M0 > 0.0
                           ? ens.profile.mass * profile_phi_sup(ens.profile) *
                                 profile_psi_weighted_sup(ens.profile, q + 2.0)
                           : 0.0;
    rep.checks.push_back(tail_bound("rho_tail", rho_inf, q, pc.Nq));
    rep.checks.push_back(tail_bound("j_tail", j_inf, q + 1.0, Nq1));
    rep.checks.push_back(tail_bound("m2_tail", m2_inf, q + 2.0, Nq2));

    BoundCheck m2data;
    m2data.name = "m2_data";
    m2data.value = m2_inf;
    m2data.bound = (4.0 * std::exp(-2.0 * t) * pc.v2f0_L1v_Linfx +
                    std::pow(delta, 1.2) * std::pow(E00, 0.4) * pc.f0_L1v_Linfx) *
                   slack;
    m2data.applicable = (lip_budget <= delta) && pc.M0 > 0.0;
    m2data.ok = m2data.value <= m2data.bound;
    rep.checks.push_back(m2data);
    return rep;
}

} // namespace vns
