#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vns/besov.hpp"
#include "vns/fluid.hpp"
#include "vns/lorentz.hpp"
#include "vns/particles.hpp"

namespace vns {

/// One time sample of every monitored functional. Field order matches the
/// CSV layout; the last three columns are derived quantities.
struct EnergyRecord {
    double t = 0.0;
    double E0 = 0.0, E1 = 0.0, E2 = 0.0;
    double D0 = 0.0, D1 = 0.0, D2 = 0.0;
    double int_D0 = 0.0;     // cumulative dissipation integral
    double lip_budget = 0.0; // int_0^t ||grad u||_inf
    double besov_neg32 = 0.0, besov_neg12 = 0.0, sobolev_half = 0.0;
    double rho_max = 0.0, j_max = 0.0, m2_max = 0.0;
    double w1_bound = 0.0, j_minus_rho_u_L1 = 0.0;
    double loglip = 0.0;
    // derived columns
    double script_E = 0.0, script_D = 0.0;
    double besov_neg_dhalf = 0.0;
};

inline const char* energy_record_header() {
    return "t,E0,E1,E2,D0,D1,D2,int_D0,lip_budget,besov_neg32,besov_neg12,sobolev_half,"
           "rho_max,j_max,m2_max,w1_bound,j_minus_rho_u_L1,loglip,script_E,script_D,"
           "besov_neg_dhalf";
}

/// Core energies and dissipation rates. Kinetic integrals are particle sums;
/// requires the tendency cache (fill it with rhs() first).
inline void energy_functionals(FluidState& state, const MomentFields& m,
                               const ParticleEnsemble& ens, const PhysicalField& u_phys,
                               double R0, const SpectralField& pressure, EnergyRecord& rec) {
    if (!state.ut_cache) throw internal_error("energy_functionals: tendency cache missing");
    const SpectralField& ut = *state.ut_cache;
    const double u_l2 = l2_norm(state.u);
    const double grad_l2sq = std::pow(sobolev_norm(state.u, 1.0), 2);
    const double e1kin = relative_kinetic_energy(ens, &u_phys);
    rec.t = state.t;
    rec.E0 = 0.5 * u_l2 * u_l2 + 0.5 * absolute_kinetic_energy(ens);
    rec.E1 = grad_l2sq + e1kin;
    rec.D0 = rec.E1;
    const double ut_l2sq = std::pow(l2_norm(ut), 2);
    rec.E2 = ut_l2sq + e1kin;
    const double hess_sq = std::pow(sobolev_norm(state.u, 2.0), 2) +
                           std::pow(sobolev_norm(pressure, 2.0), 2);
    rec.D1 = 0.5 * grad_l2sq + 0.5 * e1kin + hess_sq / (24.0 * R0);
    // sqrt(rho)-weighted tendency with the deposited density
    const PhysicalField ut_phys = to_physical(ut);
    double rho_ut = 0.0;
    for (std::size_t i = 0; i < state.u.grid.points(); ++i) {
        double m2 = 0.0;
        for (int c = 0; c < state.u.grid.d; ++c) m2 += ut_phys.at(c, i) * ut_phys.at(c, i);
        rho_ut += m.rho_phys.at(0, i) * m2;
    }
    rho_ut *= state.u.grid.cell_volume();
    rec.D2 = std::pow(sobolev_norm(ut, 1.0), 2) + rho_ut;
}

// ---------------------------------------------------------------------------
// Power-law fits

struct DecayFit {
    double exponent = 0.0;
    double confidence = 0.0; // standard error of the slope
    std::size_t samples = 0;
};

/// Least-squares slope of log(value) against log(t) over the window.
inline DecayFit decay_fit(const std::vector<double>& t, const std::vector<double>& value,
                          double window_lo, double window_hi) {
    if (t.size() != value.size()) throw usage_error("decay_fit: mismatched series");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_lo || t[i] > window_hi) continue;
        if (!(t[i] > 0.0) || !(value[i] > 0.0))
            throw data_error("decay_fit: nonpositive sample inside the fit window");
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(value[i]));
    }
    if (lx.size() < 10) throw data_error("decay_fit: need at least 10 samples in the window");
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    DecayFit fit;
    fit.exponent = sxy / sxx;
    fit.samples = lx.size();
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - my - fit.exponent * (lx[i] - mx);
        ss += r * r;
    }
    fit.confidence = (lx.size() > 2) ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
    return fit;
}

// ---------------------------------------------------------------------------
// Nash-style decay envelope: d/dt L + c0 L^{1/theta} <= 0 integrates to an
// algebraic envelope with asymptotic slope -theta/(1-theta).

inline double lyapunov_envelope(double L0, double N0, double theta, double C, double t) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw usage_error("lyapunov_envelope: theta must lie in (0,1)");
    if (!(L0 > 0.0) || !(N0 > 0.0) || !(C > 0.0))
        throw usage_error("lyapunov_envelope: inputs must be positive");
    const double c0 = std::pow(C, -1.0 / theta) * std::pow(N0, 1.0 - 1.0 / theta);
    const double expo = (1.0 - theta) / theta;
    return L0 * std::pow(1.0 + expo * c0 * std::pow(L0, expo) * t, -theta / (1.0 - theta));
}

struct LyapunovVerdict {
    double C_emp = 0.0;      // max of L / (H^theta N^{1-theta})
    double N_max = 0.0;
    bool envelope_ok = true; // L(t) <= envelope at every sample
    bool N_bound_ok = true;  // no >10% jump above the running bound
    double worst_excess = 0.0;
};

/// Samples (t_i, L_i, H_i, N_i) from a run; asserts that the interpolation
/// inequality yields a working decay envelope with the measured constant.
inline LyapunovVerdict lyapunov_check(const std::vector<double>& t, const std::vector<double>& L,
                                      const std::vector<double>& H, const std::vector<double>& N,
                                      double theta, double tol = 1e-9) {
    const std::size_t n = t.size();
    if (L.size() != n || H.size() != n || N.size() != n || n == 0)
        throw usage_error("lyapunov_check: mismatched series");
    LyapunovVerdict v;
    for (std::size_t i = 0; i < n; ++i) {
        if (L[i] < 0.0 || H[i] < 0.0 || N[i] < 0.0)
            throw data_error("lyapunov_check: sign violation in the series");
        v.N_max = std::max(v.N_max, N[i]);
        if (H[i] > 0.0 && N[i] > 0.0)
            v.C_emp = std::max(v.C_emp,
                               L[i] / (std::pow(H[i], theta) * std::pow(N[i], 1.0 - theta)));
    }
    if (v.C_emp == 0.0 || v.N_max == 0.0 || L[0] <= 0.0) return v;
    double running = N[0];
    for (std::size_t i = 0; i < n; ++i) {
        if (N[i] > 1.1 * running) v.N_bound_ok = false;
        running = std::max(running, N[i]);
        const double env = lyapunov_envelope(L[0], v.N_max, theta, v.C_emp, t[i] - t[0]);
        const double excess = L[i] / env - 1.0;
        v.worst_excess = std::max(v.worst_excess, excess);
        if (excess > tol) v.envelope_ok = false;
    }
    return v;
}

// ---------------------------------------------------------------------------
// Monokinetic concentration metrics

struct MonokineticMetrics {
    double w1_bound = 0.0;          // sum_i w_i |V_i - u(X_i)|, transport coupling cost
    double cs_bound = 0.0;          // sqrt(M0 * kinetic part of E1)
    double j_minus_rho_u_L1 = 0.0;  // quadrature L^1 of j - rho u
};

inline MonokineticMetrics monokinetic_metrics(const ParticleEnsemble& ens,
                                              const PhysicalField& u_phys,
                                              const MomentFields& m) {
    MonokineticMetrics out;
    double uat[3] = {0.0, 0.0, 0.0};
    double e1kin = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < ens.n; ++i) {
        interp_cic(u_phys, ens.pos(i), uat);
        const double* V = ens.vel(i);
        double r2 = 0.0;
        for (int c = 0; c < ens.d; ++c) {
            const double dv = V[c] - uat[c];
            r2 += dv * dv;
        }
        out.w1_bound += ens.w[i] * std::sqrt(r2);
        e1kin += ens.w[i] * r2;
        mass += ens.w[i];
    }
    out.cs_bound = std::sqrt(mass * e1kin);
    const Grid& g = u_phys.grid;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.points(); ++i) {
        double r2 = 0.0;
        for (int c = 0; c < g.d; ++c) {
            const double diff = m.j_phys.at(c, i) - m.rho_phys.at(0, i) * u_phys.at(c, i);
            r2 += diff * diff;
        }
        acc += std::sqrt(r2);
    }
    out.j_minus_rho_u_L1 = acc * g.cell_volume();
    return out;
}

// ---------------------------------------------------------------------------
// Long-time density reconstruction

struct AsymptoticDensity {
    SpectralField rho_inf;
    double residual = 0.0; // negative-norm proxy of rho(t_end) - rho_inf
    double tail_estimate = 0.0;
    bool conclusive = true;
};

/// rho_inf := rho_0 - div(int_0^{t_end} j dt). The residual is measured in a
/// B^{-1}_{2,inf} proxy; the current-tail estimate comes from the fitted
/// decay of ||j||_{L^1}.
inline AsymptoticDensity asymptotic_density(const SpectralField& rho0,
                                            const SpectralField& j_time_integral,
                                            const SpectralField& rho_end, double t_end,
                                            double j_l1_end, double j_l1_slope) {
    AsymptoticDensity out;
    out.rho_inf = rho0;
    axpy(out.rho_inf, -1.0, derive(j_time_integral, Deriv::div));
    SpectralField diff = rho_end;
    axpy(diff, -1.0, out.rho_inf);
    diff.remove_mean(); // both sides carry the same mass
    out.residual = besov_norm(diff, -1.0, std::numeric_limits<double>::infinity());
    if (j_l1_slope < -1.0)
        out.tail_estimate = j_l1_end * t_end / (-j_l1_slope - 1.0);
    else
        out.tail_estimate = std::numeric_limits<double>::infinity();
    out.conclusive = out.tail_estimate <= 0.5 * out.residual || out.residual == 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Log-Lipschitz modulus

inline double loglip_modulus(double r, double eta) {
    return r * std::pow(1.0 - std::log(r), 1.0 - eta);
}

/// sup over sampled grid pairs of |u(y)-u(x)| / omega(|y-x|) with
/// omega(r) = r (1 - log r)^{1-eta}, pairs up to distance 1. A lower bound
/// of the true sup (sampled).
inline double loglip_norm(const PhysicalField& u, double eta) {
    if (!(eta > 0.0) || !(eta < 0.5)) throw usage_error("loglip_norm: eta must lie in (0, 1/2)");
    const Grid& g = u.grid;
    // dyadic offsets per axis and along the diagonal, capped at distance 1
    std::vector<std::array<int, 3>> offsets;
    for (int a = 0; a < g.d; ++a)
        for (int step = 1; step * g.dx() <= 1.0; step *= 2) {
            std::array<int, 3> off = {0, 0, 0};
            off[a] = step;
            offsets.push_back(off);
        }
    for (int step = 1; step * g.dx() * std::sqrt(static_cast<double>(g.d)) <= 1.0; step *= 2) {
        std::array<int, 3> off = {step, step, (g.d == 3) ? step : 0};
        offsets.push_back(off);
    }
    const int stride = std::max<int>(1, g.N / 32);
    double best = 0.0;
    std::array<int, 3> idx{0, 0, 0}, nidx{0, 0, 0};
    const int nloop = (g.d == 3) ? g.N : 1;
    for (int i0 = 0; i0 < g.N; i0 += stride)
        for (int i1 = 0; i1 < g.N; i1 += stride)
            for (int i2 = 0; i2 < nloop; i2 += stride) {
                idx = {i0, i1, i2};
                const std::size_t base = g.encode(idx);
                for (const auto& off : offsets) {
                    double r2 = 0.0;
                    for (int a = 0; a < g.d; ++a) r2 += off[a] * off[a];
                    const double r = std::sqrt(r2) * g.dx();
                    if (r > 1.0) continue;
                    for (int a = 0; a < 3; ++a) nidx[a] = idx[a] + off[a];
                    const std::size_t nb = g.encode(nidx);
                    double gap2 = 0.0;
                    for (int c = 0; c < u.ncomp; ++c) {
                        const double dv = u.at(c, nb) - u.at(c, base);
                        gap2 += dv * dv;
                    }
                    best = std::max(best, std::sqrt(gap2) / loglip_modulus(r, eta));
                }
            }
    return best;
}

// ---------------------------------------------------------------------------
// Lipschitz-budget source terms in Lorentz norms

struct LipschitzChainReport {
    double ut_Ld1 = 0.0;        // ||u_t||_{L^{d,1}}
    double conv_Ld1 = 0.0;      // ||u.grad u||_{L^{d,1}}
    double brinkman_Ld1 = 0.0;  // drag source in L^{d,1}
    double grad_u_inf = 0.0;
    double gn_ratio = 0.0;      // ||grad u||_inf / ||grad^2 u||_{L^{d,1}}
};

inline LipschitzChainReport lipschitz_chain_report(FluidState& state, const MomentFields& m,
                                                   double cutoff) {
    LipschitzChainReport rep;
    const Grid& g = state.u.grid;
    const double p = static_cast<double>(g.d);
    const SpectralField& ut = rhs(state, m.brinkman, cutoff);
    rep.ut_Ld1 = lorentz_norm(to_physical(ut), p, 1.0);
    rep.conv_Ld1 = lorentz_norm(to_physical(detail::convection(state.u)), p, 1.0);
    rep.brinkman_Ld1 = lorentz_norm(m.brinkman_phys, p, 1.0);
    rep.grad_u_inf = linf_norm(to_physical(derive(state.u, Deriv::grad)));
    const double hess = lorentz_norm(to_physical(derive(state.u, Deriv::hessian)), p, 1.0);
    rep.gn_ratio = (hess > 0.0) ? rep.grad_u_inf / hess : 0.0;
    return rep;
}

} // namespace vns
