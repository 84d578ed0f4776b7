#pragma once

#include <complex>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "vns/grid.hpp"

namespace vns {

/// In-place c2c FFT plans for one lattice shape. Data is staged through an
/// internal fftw-aligned buffer so callers can use plain std::vector storage.
/// FFTW_ESTIMATE keeps planning deterministic.
class FftPlan {
public:
    FftPlan(int d, int N) : d_(d), N_(N), size_(1) {
        for (int a = 0; a < d; ++a) size_ *= static_cast<std::size_t>(N);
        buf_ = fftw_alloc_complex(size_);
        int dims[3] = {N, N, N};
        fwd_ = fftw_plan_dft(d, dims, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft(d, dims, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    /// physical -> coefficients, normalized by 1/N^d (constant c maps to
    /// zero mode c).
    void forward(const std::complex<double>* in, std::complex<double>* out) const {
        std::memcpy(buf_, static_cast<const void*>(in), size_ * sizeof(fftw_complex));
        fftw_execute(fwd_);
        const double scale = 1.0 / static_cast<double>(size_);
        auto* b = reinterpret_cast<const std::complex<double>*>(buf_);
        for (std::size_t i = 0; i < size_; ++i) out[i] = b[i] * scale;
    }

    /// coefficients -> physical, unnormalized inverse.
    void backward(const std::complex<double>* in, std::complex<double>* out) const {
        std::memcpy(buf_, static_cast<const void*>(in), size_ * sizeof(fftw_complex));
        fftw_execute(bwd_);
        std::memcpy(static_cast<void*>(out), buf_, size_ * sizeof(fftw_complex));
    }

    std::size_t size() const { return size_; }

private:
    int d_, N_;
    std::size_t size_;
    fftw_complex* buf_;
    fftw_plan fwd_, bwd_;
};

/// Process-wide plan cache keyed by (d, N).
inline const FftPlan& fft_plan(const Grid& g) {
    static std::map<std::pair<int, int>, std::unique_ptr<FftPlan>> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_pair(g.d, g.N);
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, std::make_unique<FftPlan>(g.d, g.N)).first;
    return *it->second;
}

} // namespace vns
