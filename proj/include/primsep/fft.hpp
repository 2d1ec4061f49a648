#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace primsep {

// Thin RAII wrappers over FFTW double-precision plans. Plan creation and
// destruction are serialized internally; each instance owns its buffers, so
// distinct instances are safe to use from different threads.

class RealFft {
public:
    explicit RealFft(std::size_t size);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return size_; }
    std::size_t num_bins() const { return size_ / 2 + 1; }

    // Forward: size real samples -> size/2+1 complex bins.
    void forward(const double* in, std::complex<double>* out);
    // Inverse: size/2+1 bins -> size real samples, scaled by 1/size.
    void inverse(const std::complex<double>* in, double* out);

private:
    std::size_t size_;
    void* plan_fwd_;
    void* plan_inv_;
    double* real_buf_;
    void* complex_buf_;
};

class Complex2dFft {
public:
    Complex2dFft(std::size_t rows, std::size_t cols);
    ~Complex2dFft();
    Complex2dFft(const Complex2dFft&) = delete;
    Complex2dFft& operator=(const Complex2dFft&) = delete;

    // In/out are row-major rows x cols. Inverse is scaled by 1/(rows*cols).
    void forward(const std::complex<double>* in, std::complex<double>* out);
    void inverse(const std::complex<double>* in, std::complex<double>* out);

private:
    std::size_t rows_, cols_;
    void* plan_fwd_;
    void* plan_inv_;
    void* buf_in_;
    void* buf_out_;
};

} // namespace primsep
