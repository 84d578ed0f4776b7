#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vns/besov.hpp"
#include "vns/spectral_field.hpp"

namespace vns {

enum class Scheme { if_rk2, imex_cn };

inline Scheme scheme_from_string(const std::string& s) {
    if (s == "ifrk2" || s == "if-rk2") return Scheme::if_rk2;
    if (s == "imexcn" || s == "imex-cn") return Scheme::imex_cn;
    throw config_error("unknown time scheme: " + s);
}

/// Velocity state of the momentum equation. u is divergence free with zero
/// mean; caches are invalidated by step().
struct FluidState {
    SpectralField u;
    double t = 0.0;
    bool cfl_warning = false;
    std::optional<SpectralField> ut_cache;
    std::optional<SpectralField> p_cache;

    void invalidate() {
        ut_cache.reset();
        p_cache.reset();
    }
};

/// Maps a trial velocity to the drag source deposited against it; the driver
/// binds the frozen particle ensemble here so time stages see a consistent
/// back-reaction.
using BrinkmanEval = std::function<SpectralField(const SpectralField&)>;

namespace detail {

/// Dealiased pseudospectral u.grad u.
inline SpectralField convection(const SpectralField& u) {
    const Grid& g = u.grid;
    const std::size_t n = g.points();
    const PhysicalField up = to_physical(u);
    const PhysicalField gup = to_physical(derive(u, Deriv::grad));
    PhysicalField conv(g, g.d);
    for (int c = 0; c < g.d; ++c)
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (int a = 0; a < g.d; ++a)
                s += up.at(a, i) * gup.at(c * g.d + a, i); // u_a d_a u_c
            conv.at(c, i) = s;
        }
    SpectralField out = to_spectral(conv);
    dealias(out);
    return out;
}

/// Galerkin projector: sharp ball cutoff, divergence-free projection, zero
/// mean (velocity fields have their mean pinned to zero on the box).
inline SpectralField galerkin(const SpectralField& z, double cutoff) {
    SpectralField out = friedrichs_project(z, cutoff);
    out.remove_mean();
    return out;
}

/// Explicit tendency J_n(-u.grad u + brinkman).
inline SpectralField explicit_tendency(const SpectralField& u, double cutoff,
                                       const BrinkmanEval* brinkman) {
    SpectralField nl = convection(u);
    scale(nl, -1.0);
    if (brinkman) {
        const SpectralField b = (*brinkman)(u);
        axpy(nl, 1.0, b);
    }
    return galerkin(nl, cutoff);
}

inline void apply_heat_factor(SpectralField& z, double t) {
    const std::size_t n = z.grid.points();
    for (std::size_t i = 0; i < n; ++i) {
        const double f = std::exp(-z.grid.k_squared(i) * t);
        for (int c = 0; c < z.ncomp; ++c) z.at(c, i) *= f;
    }
}

} // namespace detail

/// Instantaneous tendency u_t = Lap u - J_n(u.grad u) + J_n(brinkman), the
/// field feeding the time-derivative energies. Cached on the state.
inline const SpectralField& rhs(FluidState& state, const SpectralField& brinkman, double cutoff) {
    if (state.ut_cache) return *state.ut_cache;
    if (brinkman.grid != state.u.grid)
        throw config_error("rhs: moment grid does not match the velocity grid");
    SpectralField ut = derive(state.u, Deriv::laplacian);
    SpectralField nl = detail::convection(state.u);
    scale(nl, -1.0);
    axpy(nl, 1.0, brinkman);
    axpy(ut, 1.0, detail::galerkin(nl, cutoff));
    ut.is_solenoidal = true;
    state.ut_cache = std::move(ut);
    return *state.ut_cache;
}

/// One time step with the heat factor treated exactly (IF-RK2, default) or by
/// Crank-Nicolson (IMEX-CN); both second order in dt. `brinkman` may be null
/// (pure Navier-Stokes). CFL violations set a warning flag, never abort.
inline FluidState step(const FluidState& state, double dt, Scheme scheme, double cutoff,
                       const BrinkmanEval* brinkman = nullptr) {
    if (!(dt > 0.0)) throw usage_error("step: dt must be positive");
    const Grid& g = state.u.grid;
    FluidState next;
    next.t = state.t + dt;

    const SpectralField n0 = detail::explicit_tendency(state.u, cutoff, brinkman);
    if (scheme == Scheme::if_rk2) {
        // predictor: E(dt) (u + dt N(u)); corrector: trapezoid in the
        // integrating-factor variable
        SpectralField u1 = lin_comb(1.0, state.u, dt, n0);
        detail::apply_heat_factor(u1, dt);
        const SpectralField n1 = detail::explicit_tendency(u1, cutoff, brinkman);
        SpectralField acc = lin_comb(1.0, state.u, 0.5 * dt, n0);
        detail::apply_heat_factor(acc, dt);
        axpy(acc, 0.5 * dt, n1);
        next.u = std::move(acc);
    } else {
        const std::size_t n = g.points();
        auto cn = [&](const SpectralField& base, const SpectralField& expl,
                      double wexp) {
            SpectralField out = base;
            for (std::size_t i = 0; i < n; ++i) {
                const double k2 = g.k_squared(i);
                const double a = 1.0 - 0.5 * k2 * dt;
                const double b = 1.0 / (1.0 + 0.5 * k2 * dt);
                for (int c = 0; c < out.ncomp; ++c)
                    out.at(c, i) = (a * base.at(c, i) + wexp * dt * expl.at(c, i)) * b;
            }
            return out;
        };
        SpectralField u1 = cn(state.u, n0, 1.0);
        const SpectralField n1 = detail::explicit_tendency(u1, cutoff, brinkman);
        SpectralField nmid = lin_comb(0.5, n0, 0.5, n1);
        next.u = cn(state.u, nmid, 1.0);
    }
    next.u = detail::galerkin(next.u, cutoff);
    const double umax = linf_norm(to_physical(state.u));
    next.cfl_warning = (umax * dt / g.dx() > 0.5);
    return next;
}

/// Pressure from the incompressibility constraint:
/// grad P = (I - P)(-u.grad u + brinkman) on the Galerkin ball, inverted by
/// the Laplacian on the mean-free part.
inline SpectralField pressure_solve(FluidState& state, const SpectralField& brinkman,
                                    double cutoff) {
    if (state.p_cache) return *state.p_cache;
    const Grid& g = state.u.grid;
    SpectralField w = detail::convection(state.u);
    scale(w, -1.0);
    axpy(w, 1.0, brinkman);
    w = ball_truncate(w, cutoff);
    SpectralField P(g, 1);
    const std::size_t n = g.points();
    std::array<double, 3> k;
    for (std::size_t i = 1; i < n; ++i) {
        g.wavevector(i, k);
        const double k2 = g.k_squared(i);
        if (k2 == 0.0) continue;
        cd kw(0.0);
        for (int c = 0; c < g.d; ++c) kw += k[c] * w.at(c, i);
        P.at(0, i) = cd(0.0, -1.0) * kw / k2;
    }
    state.p_cache = std::move(P);
    return *state.p_cache;
}

/// Defect of the stationary force balance -Lap u + grad P + u.grad u -
/// brinkman + u_t, all pieces on the Galerkin ball. Should sit at round-off.
inline double stokes_residual(FluidState& state, const SpectralField& brinkman, double cutoff) {
    const SpectralField& ut = rhs(state, brinkman, cutoff);
    const SpectralField P = pressure_solve(state, brinkman, cutoff);
    SpectralField res = derive(state.u, Deriv::laplacian);
    scale(res, -1.0);
    axpy(res, 1.0, derive(P, Deriv::grad));
    axpy(res, 1.0, ut);
    SpectralField force = detail::convection(state.u);
    scale(force, -1.0);
    axpy(force, 1.0, brinkman);
    force = ball_truncate(force, cutoff);
    // the tendency discards the mean and the non-ball modes; compare there
    force.remove_mean();
    axpy(res, -1.0, force);
    const double scale_norm = l2_norm(ut) + l2_norm(force) + sobolev_norm(state.u, 2.0);
    return l2_norm(res) / (scale_norm > 0.0 ? scale_norm : 1.0);
}

// ---------------------------------------------------------------------------
// Duhamel decomposition u = e^{t Lap} u0 + int_0^t e^{(t-s) Lap} P S ds +
// remainder, with S the momentum source.

struct HistoryNorms {
    double sup_Hhalf = 0.0;    // sup_t homogeneous H^{1/2}
    double sup_Bhalf21 = 0.0;  // sup_t B^{1/2}_{2,1}
    double L2t_B32_21 = 0.0;   // L^2 in time of B^{3/2}_{2,1}
    double L1t_B52_21 = 0.0;   // L^1 in time of B^{5/2}_{2,1}
    double cl_L1_B52_22 = 0.0; // time norm inside shells, rho=1, s=5/2, r=2
};

struct DuhamelSplit {
    std::vector<SpectralField> u_l1, u_l2, u_tilde;
    HistoryNorms n_l1, n_l2, n_tilde;
    double source_L43_L2 = 0.0; // ||S||_{L^{4/3}(0,T;L^2)}
};

inline HistoryNorms history_norms(const std::vector<SpectralField>& h, double dt) {
    HistoryNorms out;
    std::vector<DyadicSpectrum> series;
    series.reserve(h.size());
    for (const SpectralField& z : h) {
        SpectralField zz = z;
        zz.remove_mean();
        series.push_back(dyadic_decompose(zz));
        out.sup_Hhalf = std::max(out.sup_Hhalf, sobolev_norm(zz, 0.5));
    }
    const double inf = std::numeric_limits<double>::infinity();
    out.sup_Bhalf21 = time_lp_besov_norm(series, dt, inf, 0.5, 1.0);
    out.L2t_B32_21 = time_lp_besov_norm(series, dt, 2.0, 1.5, 1.0);
    out.L1t_B52_21 = time_lp_besov_norm(series, dt, 1.0, 2.5, 1.0);
    out.cl_L1_B52_22 = chemin_lerner_norm(series, dt, 1.0, 2.5, 2.0);
    return out;
}

/// u_history and source_history sampled at uniform times m*dt, m = 0..M.
/// The Duhamel integral uses the integrating-factor midpoint rule per
/// segment with the source averaged at segment midpoints.
inline DuhamelSplit duhamel_split(const std::vector<SpectralField>& u_history,
                                  const std::vector<SpectralField>& source_history,
                                  const SpectralField& u0, double dt) {
    if (u_history.size() < 2 || u_history.size() != source_history.size())
        throw usage_error("duhamel_split: histories must align and hold >= 2 samples");
    const std::size_t m = u_history.size();
    DuhamelSplit out;
    out.u_l1.reserve(m);
    out.u_l2.reserve(m);
    out.u_tilde.reserve(m);

    SpectralField l1 = u0;
    SpectralField l2 = SpectralField::zeros(u0.grid, u0.ncomp);
    for (std::size_t q = 0; q < m; ++q) {
        if (q > 0) {
            detail::apply_heat_factor(l1, dt);
            detail::apply_heat_factor(l2, dt);
            SpectralField smid = lin_comb(0.5, source_history[q - 1], 0.5, source_history[q]);
            smid = leray_project(smid);
            smid.remove_mean();
            detail::apply_heat_factor(smid, 0.5 * dt);
            axpy(l2, dt, smid);
        }
        out.u_l1.push_back(l1);
        out.u_l2.push_back(l2);
        SpectralField tilde = u_history[q];
        axpy(tilde, -1.0, l1);
        axpy(tilde, -1.0, l2);
        out.u_tilde.push_back(std::move(tilde));
    }
    out.n_l1 = history_norms(out.u_l1, dt);
    out.n_l2 = history_norms(out.u_l2, dt);
    out.n_tilde = history_norms(out.u_tilde, dt);
    double acc = 0.0;
    for (std::size_t q = 0; q < m; ++q) {
        const double w = (q == 0 || q + 1 == m) ? 0.5 * dt : dt;
        acc += w * std::pow(l2_norm(source_history[q]), 4.0 / 3.0);
    }
    out.source_L43_L2 = std::pow(acc, 0.75);
    return out;
}

} // namespace vns
