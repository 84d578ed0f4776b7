#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vns/spectral_field.hpp"

namespace vns {

/// Discrete decreasing rearrangement of |z| over the box: sorted sample
/// magnitudes, each carrying one cell of measure.
struct ReArrangement {
    std::vector<double> values; // non-increasing
    double cell_measure = 0.0;

    double total_measure() const { return cell_measure * values.size(); }
};

inline ReArrangement rearrange(const PhysicalField& s) {
    ReArrangement r;
    r.values = pointwise_magnitude(s);
    std::sort(r.values.begin(), r.values.end(), std::greater<double>());
    r.cell_measure = s.grid.cell_volume();
    return r;
}

/// Lorentz norm by the rearrangement formula
///   ||f||_{L^{p,r}} = || t^{1/p} f*(t) ||_{L^r(dt/t)},
/// evaluated exactly on the step function f*. L^{p,p} reproduces the L^p
/// quadrature norm; an indicator of measure m has L^{p,1} norm p m^{1/p}.
inline double lorentz_norm(const ReArrangement& r, double p, double rr) {
    if (!(p > 1.0) || std::isinf(p)) throw usage_error("lorentz_norm: p must lie in (1,inf)");
    if (!(rr >= 1.0)) throw usage_error("lorentz_norm: r must be >= 1");
    const double mu = r.cell_measure;
    if (std::isinf(rr)) {
        // sup over each step attained at its right endpoint
        double best = 0.0;
        for (std::size_t i = 0; i < r.values.size(); ++i) {
            if (r.values[i] == 0.0) break;
            best = std::max(best, r.values[i] * std::pow((i + 1) * mu, 1.0 / p));
        }
        return best;
    }
    // int (t^{1/p} f*)^r dt/t = sum_i f*_i^r (p/r) [((i+1)mu)^{r/p} - (i mu)^{r/p}]
    double acc = 0.0;
    double left = 0.0; // (i mu)^{r/p}
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        const double right = std::pow((i + 1) * mu, rr / p);
        if (r.values[i] > 0.0) acc += std::pow(r.values[i], rr) * (p / rr) * (right - left);
        left = right;
    }
    return std::pow(acc, 1.0 / rr);
}

inline double lorentz_norm(const PhysicalField& s, double p, double rr) {
    return lorentz_norm(rearrange(s), p, rr);
}

inline double lorentz_norm(const SpectralField& z, double p, double rr) {
    return lorentz_norm(to_physical(z), p, rr);
}

} // namespace vns
