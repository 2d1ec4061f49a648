#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "primsep/tfr.hpp"

namespace primsep {

// Hyperparameters of the four primitive separators. Defaults are embedded;
// every field can be overridden from a key=value config file (see
// load_primitive_config and the README schema).
struct PrimitiveConfig {
    // Harmonic/percussive separation by orthogonal median filtering.
    std::size_t hpss_time_kernel = 17;  // frames, odd
    std::size_t hpss_freq_kernel = 17;  // bins, odd
    double hpss_mask_power = 2.0;

    // Patch-transform primitives (repetition, micro-modulation).
    std::size_t twodft_patch_t = 256; // frames per patch
    std::size_t twodft_patch_f = 256; // bins per patch
    std::size_t twodft_peak_nbhd_rate = 1;  // local-max half extent, rate axis
    std::size_t twodft_peak_nbhd_scale = 0; // local-max half extent, scale axis
    double twodft_peak_threshold_factor = 4.0; // peak if above factor * patch median
    std::size_t twodft_zero_rate_halfwidth = 1; // rate bins around DC treated as unmodulated

    // Predominant-melody masking.
    double melodic_f0_min_hz = 80.0;
    double melodic_f0_max_hz = 1000.0;
    std::size_t melodic_harmonics = 10;
    double melodic_tolerance_cents = 50.0;
    double melodic_grid_cents = 10.0;       // f0 grid step
    double melodic_smooth_lambda = 0.1;     // transition cost factor per 100 cents
    double melodic_voicing_tau = 0.6;       // voiced if salience >= tau * median frame salience

    void validate() const; // throws std::invalid_argument on bad values
};

// Parses "key = value" lines ('#' comments allowed); unknown keys are errors.
PrimitiveConfig load_primitive_config(const std::string& path);

// --- The four primitives -----------------------------------------------
// Each maps a magnitude spectrogram to a vocals-oriented soft mask
// (1 = vocals, 0 = accompaniment) of identical geometry.

// Median filter along time (harmonic guide H) vs along frequency
// (percussive guide P); vocals get the fluctuating side:
// mask = P^p / (H^p + P^p), 0.5 where both are zero.
SoftMask hpss_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg);

// Per overlapping patch, peaks of the 2D transform model the repeating
// background; vocals mask = 1 - min(1, repeating / |patch|).
SoftMask repetition_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg);

// Energy off the zero-rate axis (temporal modulation) is attributed to
// vocals. Per bin within each patch: vocals = min(1, sqrt(2) * rms of the
// off-band reconstruction / temporal mean) -- a modulation index that is 0
// for steady content and 1 for full-depth amplitude modulation.
SoftMask micromodulation_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg);

// Harmonic-salience melody tracking; voiced frames get 1 near each harmonic
// of the tracked f0 with a raised-cosine rolloff, unvoiced frames get 0.
SoftMask melodic_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg);

// Intermediate melody-tracking state, exposed for inspection and tests.
struct MelodicAnalysis {
    std::vector<double> contour_hz;   // per frame; meaningful where voiced
    std::vector<bool> voiced;         // per frame
    std::vector<double> frame_salience; // best salience per frame
};
MelodicAnalysis melodic_analysis(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg);

// Fixed ensemble order used throughout the toolkit.
const std::vector<std::string>& primitive_names();
std::vector<SoftMask> run_all_primitives(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg);

} // namespace primsep
