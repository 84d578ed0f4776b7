#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace vns {

/// Deterministic RNG used everywhere; normal variates via Box-Muller on raw
/// uniforms so streams do not depend on the standard library's distribution
/// internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() {
        // in (0,1]; avoids log(0) in Box-Muller
        return (static_cast<double>(eng_()) + 1.0) * 0x1.0p-64;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace vns
