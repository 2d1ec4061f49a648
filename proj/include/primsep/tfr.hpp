#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "primsep/audio.hpp"

namespace primsep {

constexpr std::size_t kWindowLength = 2048;
constexpr std::size_t kHopLength = 512;

struct RasterShape {
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;
    bool operator==(const RasterShape& o) const {
        return num_frames == o.num_frames && num_bins == o.num_bins;
    }
    bool operator!=(const RasterShape& o) const { return !(*this == o); }
    std::size_t size() const { return num_frames * num_bins; }
};

// T x F one-sided complex raster, row-major (frame outer, bin inner).
struct ComplexSpectrogram {
    std::vector<std::complex<double>> values;
    std::size_t num_frames = 0;
    std::size_t num_bins = 0; // window_length/2 + 1
    std::size_t window_length = kWindowLength;
    std::size_t hop_length = kHopLength;
    int sample_rate = kCanonicalSampleRate;

    RasterShape shape() const { return {num_frames, num_bins}; }
    std::complex<double>& at(std::size_t t, std::size_t f) { return values[t * num_bins + f]; }
    const std::complex<double>& at(std::size_t t, std::size_t f) const { return values[t * num_bins + f]; }
};

struct MagnitudeSpectrogram {
    std::vector<double> values;
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;
    std::size_t window_length = kWindowLength;
    std::size_t hop_length = kHopLength;
    int sample_rate = kCanonicalSampleRate;

    RasterShape shape() const { return {num_frames, num_bins}; }
    double& at(std::size_t t, std::size_t f) { return values[t * num_bins + f]; }
    double at(std::size_t t, std::size_t f) const { return values[t * num_bins + f]; }
};

// T x F weights in [0, 1]. Orientation convention across the whole toolkit:
// 1 = vocals, 0 = accompaniment.
struct SoftMask {
    std::vector<double> values;
    std::size_t num_frames = 0;
    std::size_t num_bins = 0;

    RasterShape shape() const { return {num_frames, num_bins}; }
    double& at(std::size_t t, std::size_t f) { return values[t * num_bins + f]; }
    double at(std::size_t t, std::size_t f) const { return values[t * num_bins + f]; }
};

SoftMask make_mask(std::size_t num_frames, std::size_t num_bins, double fill = 0.0);

// Square-root Hann analysis/synthesis STFT, centered: the input is zero-padded
// by window_length/2 on both ends and frame t starts at padded sample
// t*hop_length. T = ceil((len + window_length) / hop_length).
ComplexSpectrogram stft(const AudioClip& clip,
                        std::size_t window_length = kWindowLength,
                        std::size_t hop_length = kHopLength);

// Overlap-add inverse with the same window; normalizes by the accumulated
// squared window, so istft(stft(x), len) == x to within ~1e-12.
AudioClip istft(const ComplexSpectrogram& spec, std::size_t length);

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec);

ComplexSpectrogram apply_mask(const ComplexSpectrogram& spec, const SoftMask& mask);

SoftMask complement(const SoftMask& mask); // 1 - m

// Indices of the ceil(fraction*T*F) largest-magnitude bins, returned in
// ascending (t, f) order. Ties are broken toward ascending (t, f) so the
// selection is deterministic.
std::vector<std::pair<std::size_t, std::size_t>>
loudest_bins(const MagnitudeSpectrogram& mag, double fraction);

// MSK1 raster dump: magic "MSK1", u32le T, u32le F, then T*F float32le
// values row-major.
void write_msk1(const SoftMask& mask, const std::string& path);
SoftMask read_msk1(const std::string& path);

} // namespace primsep
