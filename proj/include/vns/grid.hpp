#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "vns/errors.hpp"

namespace vns {

/// Periodic box [0,L)^d sampled on an N^d lattice, with the matching
/// wavenumber lattice k in (2pi/L)*Z^d, integer indices folded to
/// {-N/2,...,N/2-1} per axis (the N/2 bin is its own reflection).
struct Grid {
    int d = 3;        // spatial dimension, 2 or 3
    int N = 64;       // points per axis, even; powers of two recommended
    double L = 2.0 * M_PI;

    Grid() = default;
    Grid(int d_, int N_, double L_) : d(d_), N(N_), L(L_) {
        if (d != 2 && d != 3) throw config_error("Grid: dimension must be 2 or 3");
        if (N < 8 || N % 2 != 0) throw config_error("Grid: N must be even and >= 8");
        if (!(L > 0.0)) throw config_error("Grid: box side must be positive");
    }

    std::size_t points() const {
        std::size_t n = 1;
        for (int a = 0; a < d; ++a) n *= static_cast<std::size_t>(N);
        return n;
    }

    double dx() const { return L / N; }
    double cell_volume() const { return std::pow(dx(), d); }
    double volume() const { return std::pow(L, d); }

    /// Smallest nonzero |k| on the lattice.
    double k_min() const { return 2.0 * M_PI / L; }
    /// Largest per-axis |k| (Nyquist).
    double k_max() const { return M_PI * N / L; }
    /// Per-axis index radius kept by the 2/3 dealiasing rule.
    int dealias_index() const { return N / 3; }
    /// Wavenumber radius kept by the 2/3 rule.
    double dealias_radius() const { return k_min() * dealias_index(); }

    /// Signed integer frequency of axis index i.
    int freq(int i) const { return (i <= N / 2) ? i : i - N; }

    /// Decompose a flat lattice index (row-major) into per-axis indices.
    void decode(std::size_t flat, std::array<int, 3>& idx) const {
        idx = {0, 0, 0};
        for (int a = d - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(flat % N);
            flat /= N;
        }
    }

    std::size_t encode(const std::array<int, 3>& idx) const {
        std::size_t flat = 0;
        for (int a = 0; a < d; ++a) {
            int i = idx[a] % N;
            if (i < 0) i += N;
            flat = flat * N + static_cast<std::size_t>(i);
        }
        return flat;
    }

    /// Wavevector at a flat lattice index.
    void wavevector(std::size_t flat, std::array<double, 3>& k) const {
        std::array<int, 3> idx;
        decode(flat, idx);
        k = {0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) k[a] = k_min() * freq(idx[a]);
    }

    double k_squared(std::size_t flat) const {
        std::array<double, 3> k;
        wavevector(flat, k);
        return k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    }

    /// Physical coordinate of a flat lattice index.
    void coord(std::size_t flat, std::array<double, 3>& x) const {
        std::array<int, 3> idx;
        decode(flat, idx);
        x = {0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) x[a] = dx() * idx[a];
    }

    bool operator==(const Grid& o) const { return d == o.d && N == o.N && L == o.L; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

} // namespace vns
