#pragma once

#include <fftw3.h>

#include <mutex>
#include <vector>

#include "rclb/core.hpp"

namespace rclb {

namespace detail {
inline std::mutex& fftw_plan_mutex() {
    static std::mutex mu;
    return mu;
}
}  // namespace detail

/// Periodic autocorrelation of a real field on a d-dimensional torus:
///   corr(x) = (1/N) sum_v f(v) f(v+x)
/// via one r2c / c2r round trip. Plans use FFTW_ESTIMATE, which picks the
/// algorithm deterministically (byte-stable reruns); plan creation is
/// serialized because the FFTW planner is not thread-safe.
class FftCorrelator {
  public:
    explicit FftCorrelator(const std::vector<int>& dims) : dims_(dims) {
        n_ = 1;
        for (int d : dims_) n_ *= d;
        nc_ = n_ / dims_.back() * (dims_.back() / 2 + 1);
        real_ = fftw_alloc_real(n_);
        spec_ = fftw_alloc_complex(nc_);
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fwd_ = fftw_plan_dft_r2c(static_cast<int>(dims_.size()), dims_.data(), real_, spec_,
                                 FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r(static_cast<int>(dims_.size()), dims_.data(), spec_, real_,
                                 FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) throw std::runtime_error("fftw plan creation failed");
    }

    FftCorrelator(const FftCorrelator&) = delete;
    FftCorrelator& operator=(const FftCorrelator&) = delete;

    ~FftCorrelator() {
        std::lock_guard<std::mutex> lock(detail::fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(real_);
        fftw_free(spec_);
    }

    long size() const { return n_; }

    /// out[x] += (1/N) sum_v f(v) f(v+x); `out` has row-major torus layout.
    void accumulate(const double* field, double* out) {
        for (long i = 0; i < n_; ++i) real_[i] = field[i];
        fftw_execute(fwd_);
        for (long k = 0; k < nc_; ++k) {
            double re = spec_[k][0], im = spec_[k][1];
            spec_[k][0] = re * re + im * im;
            spec_[k][1] = 0.0;
        }
        fftw_execute(bwd_);
        // c2r returns N * IDFT, so corr = real_ / N^2 per site-average.
        double inv = 1.0 / (static_cast<double>(n_) * static_cast<double>(n_));
        for (long i = 0; i < n_; ++i) out[i] += real_[i] * inv;
    }

  private:
    std::vector<int> dims_;
    long n_ = 0, nc_ = 0;
    double* real_;
    fftw_complex* spec_;
    fftw_plan fwd_, bwd_;
};

}  // namespace rclb
