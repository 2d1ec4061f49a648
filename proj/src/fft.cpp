#include "primsep/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace primsep {

namespace {
// FFTW's planner is not thread-safe.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace

RealFft::RealFft(std::size_t size) : size_(size) {
    if (size < 2 || size % 2 != 0) throw std::invalid_argument("RealFft: size must be even and >= 2");
    std::lock_guard<std::mutex> lock(planner_mutex());
    real_buf_ = fftw_alloc_real(size);
    complex_buf_ = fftw_alloc_complex(size / 2 + 1);
    plan_fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(size), real_buf_,
                                     static_cast<fftw_complex*>(complex_buf_), FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(size),
                                     static_cast<fftw_complex*>(complex_buf_), real_buf_, FFTW_ESTIMATE);
    if (plan_fwd_ == nullptr || plan_inv_ == nullptr) throw std::runtime_error("RealFft: planning failed");
}

RealFft::~RealFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(real_buf_);
    fftw_free(complex_buf_);
}

void RealFft::forward(const double* in, std::complex<double>* out) {
    std::memcpy(real_buf_, in, size_ * sizeof(double));
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    std::memcpy(out, complex_buf_, num_bins() * sizeof(std::complex<double>));
}

void RealFft::inverse(const std::complex<double>* in, double* out) {
    std::memcpy(complex_buf_, in, num_bins() * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t i = 0; i < size_; ++i) out[i] = real_buf_[i] * scale;
}

Complex2dFft::Complex2dFft(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("Complex2dFft: empty extent");
    std::lock_guard<std::mutex> lock(planner_mutex());
    buf_in_ = fftw_alloc_complex(rows * cols);
    buf_out_ = fftw_alloc_complex(rows * cols);
    plan_fwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols),
                                 static_cast<fftw_complex*>(buf_in_), static_cast<fftw_complex*>(buf_out_),
                                 FFTW_FORWARD, FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols),
                                 static_cast<fftw_complex*>(buf_in_), static_cast<fftw_complex*>(buf_out_),
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
    if (plan_fwd_ == nullptr || plan_inv_ == nullptr) throw std::runtime_error("Complex2dFft: planning failed");
}

Complex2dFft::~Complex2dFft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
    fftw_free(buf_in_);
    fftw_free(buf_out_);
}

void Complex2dFft::forward(const std::complex<double>* in, std::complex<double>* out) {
    std::memcpy(buf_in_, in, rows_ * cols_ * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(plan_fwd_));
    std::memcpy(out, buf_out_, rows_ * cols_ * sizeof(std::complex<double>));
}

void Complex2dFft::inverse(const std::complex<double>* in, std::complex<double>* out) {
    std::memcpy(buf_in_, in, rows_ * cols_ * sizeof(std::complex<double>));
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    const double scale = 1.0 / static_cast<double>(rows_ * cols_);
    auto* o = static_cast<std::complex<double>*>(buf_out_);
    for (std::size_t i = 0; i < rows_ * cols_; ++i) out[i] = o[i] * scale;
}

} // namespace primsep
