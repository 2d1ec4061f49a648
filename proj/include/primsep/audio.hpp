#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace primsep {

// Sampled waveform. Samples are dimensionless amplitudes, nominally in
// [-1, 1]; integer PCM input is scaled by 2^(bits-1) on load.
struct AudioClip {
    std::vector<std::vector<double>> samples; // one vector per channel
    int sample_rate = 0;

    std::size_t num_channels() const { return samples.size(); }
    std::size_t num_samples() const { return samples.empty() ? 0 : samples[0].size(); }
    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(num_samples()) / sample_rate : 0.0;
    }
    bool is_mono() const { return samples.size() == 1; }

    // Throws std::invalid_argument if channel lengths differ or rate <= 0.
    void validate() const;
};

enum class BitDepth { Pcm16, Pcm24, Float32 };

inline const int kCanonicalSampleRate = 44100;

// Reads a RIFF/WAVE file (16/24-bit PCM or 32-bit float). Rejects files whose
// sample rate is not 44100 Hz; resampling is out of scope.
AudioClip load_audio(const std::string& path);

// Writes a RIFF/WAVE file at the requested depth. Integer depths clip samples
// outside [-1, 1]; the return value counts clipped samples.
std::size_t save_audio(const AudioClip& clip, const std::string& path, BitDepth depth);

// Arithmetic mean across channels.
AudioClip downmix(const AudioClip& clip);

AudioClip make_mono_clip(std::vector<double> samples, int sample_rate = kCanonicalSampleRate);

} // namespace primsep
