#include "primsep/audio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace primsep {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatIeeeFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

} // namespace

void AudioClip::validate() const {
    if (sample_rate <= 0) throw std::invalid_argument("AudioClip: sample_rate must be > 0");
    if (samples.empty()) throw std::invalid_argument("AudioClip: no channels");
    for (const auto& ch : samples) {
        if (ch.size() != samples[0].size())
            throw std::invalid_argument("AudioClip: channels have unequal lengths");
    }
}

AudioClip load_audio(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_audio: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("load_audio: not a RIFF/WAVE file: " + path);

    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t pos = 12;
    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* pcm = nullptr;
    std::size_t pcm_size = 0;

    while (pos + 8 <= bytes.size()) {
        const char* tag = bytes.data() + pos;
        std::uint32_t chunk_size = read_u32(data + pos + 4);
        std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) throw std::runtime_error("load_audio: truncated chunk in " + path);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw std::runtime_error("load_audio: malformed fmt chunk in " + path);
            format = read_u16(data + body);
            channels = read_u16(data + body + 2);
            rate = read_u32(data + body + 4);
            bits = read_u16(data + body + 14);
            if (format == kFormatExtensible) {
                if (chunk_size < 40) throw std::runtime_error("load_audio: malformed extensible fmt chunk in " + path);
                format = read_u16(data + body + 24); // first two bytes of SubFormat GUID
            }
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            pcm = data + body;
            pcm_size = chunk_size;
        }
        pos = body + chunk_size + (chunk_size & 1); // chunks are word-aligned
    }

    if (!have_fmt || pcm == nullptr) throw std::runtime_error("load_audio: missing fmt/data chunk in " + path);
    if (channels < 1) throw std::runtime_error("load_audio: zero channels in " + path);

    const bool pcm16 = format == kFormatPcm && bits == 16;
    const bool pcm24 = format == kFormatPcm && bits == 24;
    const bool f32 = format == kFormatIeeeFloat && bits == 32;
    if (!pcm16 && !pcm24 && !f32)
        throw std::runtime_error("load_audio: unsupported codec (format tag " + std::to_string(format) +
                                 ", " + std::to_string(bits) + " bits) in " + path);
    if (rate != static_cast<std::uint32_t>(kCanonicalSampleRate))
        throw std::runtime_error("load_audio: unsupported sample rate " + std::to_string(rate) +
                                 " Hz in " + path + " (expected 44100)");

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = pcm_size / frame_bytes;

    AudioClip clip;
    clip.sample_rate = static_cast<int>(rate);
    clip.samples.assign(channels, std::vector<double>(frames));
    for (std::size_t i = 0; i < frames; ++i) {
        const unsigned char* fr = pcm + i * frame_bytes;
        for (std::size_t c = 0; c < channels; ++c) {
            const unsigned char* s = fr + c * bytes_per_sample;
            double v = 0.0;
            if (pcm16) {
                auto raw = static_cast<std::int16_t>(s[0] | (s[1] << 8));
                v = static_cast<double>(raw) / 32768.0;
            } else if (pcm24) {
                std::int32_t raw = s[0] | (s[1] << 8) | (s[2] << 16);
                if (raw & 0x800000) raw |= ~0xFFFFFF; // sign extend
                v = static_cast<double>(raw) / 8388608.0;
            } else {
                float f;
                std::memcpy(&f, s, 4);
                v = static_cast<double>(f);
            }
            clip.samples[c][i] = v;
        }
    }
    return clip;
}

std::size_t save_audio(const AudioClip& clip, const std::string& path, BitDepth depth) {
    clip.validate();
    const std::size_t channels = clip.num_channels();
    const std::size_t frames = clip.num_samples();

    std::uint16_t format = kFormatPcm;
    std::uint16_t bits = 16;
    switch (depth) {
        case BitDepth::Pcm16: bits = 16; break;
        case BitDepth::Pcm24: bits = 24; break;
        case BitDepth::Float32: bits = 32; format = kFormatIeeeFloat; break;
    }
    const std::size_t bytes_per_sample = bits / 8;
    const std::uint32_t data_size = static_cast<std::uint32_t>(frames * channels * bytes_per_sample);

    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, format);
    put_u16(out, static_cast<std::uint16_t>(channels));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(clip.sample_rate * channels * bytes_per_sample));
    put_u16(out, static_cast<std::uint16_t>(channels * bytes_per_sample));
    put_u16(out, bits);
    out += "data";
    put_u32(out, data_size);

    std::size_t clipped = 0;
    for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double v = clip.samples[c][i];
            if (depth == BitDepth::Float32) {
                const float f = static_cast<float>(v);
                char buf[4];
                std::memcpy(buf, &f, 4);
                out.append(buf, 4);
            } else if (depth == BitDepth::Pcm16) {
                if (v < -1.0 || v > 1.0) ++clipped;
                double q = std::nearbyint(v * 32768.0);
                if (q > 32767.0) q = 32767.0;
                if (q < -32768.0) q = -32768.0;
                const auto raw = static_cast<std::int16_t>(q);
                out.push_back(static_cast<char>(raw & 0xFF));
                out.push_back(static_cast<char>((raw >> 8) & 0xFF));
            } else {
                if (v < -1.0 || v > 1.0) ++clipped;
                double q = std::nearbyint(v * 8388608.0);
                if (q > 8388607.0) q = 8388607.0;
                if (q < -8388608.0) q = -8388608.0;
                const auto raw = static_cast<std::int32_t>(q);
                out.push_back(static_cast<char>(raw & 0xFF));
                out.push_back(static_cast<char>((raw >> 8) & 0xFF));
                out.push_back(static_cast<char>((raw >> 16) & 0xFF));
            }
        }
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_audio: cannot open " + path + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("save_audio: write failed for " + path);
    return clipped;
}

AudioClip downmix(const AudioClip& clip) {
    clip.validate();
    if (clip.is_mono()) return clip;
    const std::size_t n = clip.num_samples();
    const double scale = 1.0 / static_cast<double>(clip.num_channels());
    std::vector<double> mono(n, 0.0);
    for (const auto& ch : clip.samples)
        for (std::size_t i = 0; i < n; ++i) mono[i] += ch[i];
    for (auto& v : mono) v *= scale;
    AudioClip out;
    out.sample_rate = clip.sample_rate;
    out.samples.push_back(std::move(mono));
    return out;
}

AudioClip make_mono_clip(std::vector<double> samples, int sample_rate) {
    AudioClip clip;
    clip.sample_rate = sample_rate;
    clip.samples.push_back(std::move(samples));
    return clip;
}

} // namespace primsep
