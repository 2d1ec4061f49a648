#include "primsep/tfr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "primsep/fft.hpp"

namespace primsep {

namespace {

// Periodic square-root Hann: sqrt(0.5 - 0.5 cos(2 pi n / N)) = sin(pi n / N).
// Analysis == synthesis gives COLA at 75% overlap.
std::vector<double> sqrt_hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::sin(M_PI * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

void require_mono_canonical(const AudioClip& clip) {
    clip.validate();
    if (!clip.is_mono()) throw std::invalid_argument("stft: clip must be mono");
    if (clip.sample_rate != kCanonicalSampleRate)
        throw std::invalid_argument("stft: clip must be 44100 Hz");
}

} // namespace

SoftMask make_mask(std::size_t num_frames, std::size_t num_bins, double fill) {
    SoftMask m;
    m.num_frames = num_frames;
    m.num_bins = num_bins;
    m.values.assign(num_frames * num_bins, fill);
    return m;
}

ComplexSpectrogram stft(const AudioClip& clip, std::size_t window_length, std::size_t hop_length) {
    require_mono_canonical(clip);
    const std::vector<double>& x = clip.samples[0];
    if (x.empty()) throw std::invalid_argument("stft: empty clip");
    if (hop_length == 0 || hop_length > window_length)
        throw std::invalid_argument("stft: need 0 < hop <= window");

    const std::size_t len = x.size();
    const std::size_t pad = window_length / 2;
    const std::size_t num_frames = (len + window_length + hop_length - 1) / hop_length; // ceil
    const std::size_t padded_len = (num_frames - 1) * hop_length + window_length;

    std::vector<double> padded(padded_len, 0.0);
    std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

    const std::vector<double> window = sqrt_hann(window_length);
    RealFft fft(window_length);

    ComplexSpectrogram spec;
    spec.num_frames = num_frames;
    spec.num_bins = fft.num_bins();
    spec.window_length = window_length;
    spec.hop_length = hop_length;
    spec.sample_rate = clip.sample_rate;
    spec.values.resize(num_frames * spec.num_bins);

    std::vector<double> frame(window_length);
    for (std::size_t t = 0; t < num_frames; ++t) {
        const double* src = padded.data() + t * hop_length;
        for (std::size_t i = 0; i < window_length; ++i) frame[i] = src[i] * window[i];
        fft.forward(frame.data(), spec.values.data() + t * spec.num_bins);
    }
    return spec;
}

AudioClip istft(const ComplexSpectrogram& spec, std::size_t length) {
    const std::size_t window_length = spec.window_length;
    const std::size_t hop_length = spec.hop_length;
    if (spec.num_bins != window_length / 2 + 1)
        throw std::invalid_argument("istft: bin count does not match window length");
    if (hop_length == 0 || hop_length > window_length)
        throw std::invalid_argument("istft: need 0 < hop <= window");
    if (spec.values.size() != spec.num_frames * spec.num_bins)
        throw std::invalid_argument("istft: raster size mismatch");
    if (spec.num_frames == 0) throw std::invalid_argument("istft: empty spectrogram");

    const std::size_t pad = window_length / 2;
    const std::size_t covered = (spec.num_frames - 1) * hop_length + window_length;
    if (length + pad > covered)
        throw std::invalid_argument("istft: requested length exceeds frame coverage");

    const std::vector<double> window = sqrt_hann(window_length);
    RealFft fft(window_length);

    std::vector<double> acc(covered, 0.0);
    std::vector<double> wsum(covered, 0.0);
    std::vector<double> frame(window_length);
    for (std::size_t t = 0; t < spec.num_frames; ++t) {
        fft.inverse(spec.values.data() + t * spec.num_bins, frame.data());
        double* dst = acc.data() + t * hop_length;
        double* wdst = wsum.data() + t * hop_length;
        for (std::size_t i = 0; i < window_length; ++i) {
            dst[i] += frame[i] * window[i];
            wdst[i] += window[i] * window[i];
        }
    }

    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        const double w = wsum[i + pad];
        out[i] = w > 0.0 ? acc[i + pad] / w : 0.0;
    }
    AudioClip clip;
    clip.sample_rate = spec.sample_rate;
    clip.samples.push_back(std::move(out));
    return clip;
}

MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec) {
    MagnitudeSpectrogram mag;
    mag.num_frames = spec.num_frames;
    mag.num_bins = spec.num_bins;
    mag.window_length = spec.window_length;
    mag.hop_length = spec.hop_length;
    mag.sample_rate = spec.sample_rate;
    mag.values.resize(spec.values.size());
    for (std::size_t i = 0; i < spec.values.size(); ++i) mag.values[i] = std::abs(spec.values[i]);
    return mag;
}

ComplexSpectrogram apply_mask(const ComplexSpectrogram& spec, const SoftMask& mask) {
    if (spec.shape() != mask.shape()) throw std::invalid_argument("apply_mask: shape mismatch");
    ComplexSpectrogram out = spec;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= mask.values[i];
    return out;
}

SoftMask complement(const SoftMask& mask) {
    SoftMask out = mask;
    for (auto& v : out.values) v = 1.0 - v;
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>>
loudest_bins(const MagnitudeSpectrogram& mag, double fraction) {
    if (mag.values.empty()) throw std::invalid_argument("loudest_bins: empty spectrogram");
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("loudest_bins: fraction must be in (0, 1]");
    const std::size_t total = mag.values.size();
    const std::size_t count = std::min<std::size_t>(
        total, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total))));

    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&mag](std::size_t a, std::size_t b) {
        if (mag.values[a] != mag.values[b]) return mag.values[a] > mag.values[b];
        return a < b; // deterministic tie-break toward ascending (t, f)
    });
    order.resize(count);
    std::sort(order.begin(), order.end());

    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(count);
    for (std::size_t idx : order) out.emplace_back(idx / mag.num_bins, idx % mag.num_bins);
    return out;
}

void write_msk1(const SoftMask& mask, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("write_msk1: cannot open " + path);
    f.write("MSK1", 4);
    auto put_u32 = [&f](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF), static_cast<unsigned char>((v >> 8) & 0xFF),
                              static_cast<unsigned char>((v >> 16) & 0xFF),
                              static_cast<unsigned char>((v >> 24) & 0xFF)};
        f.write(reinterpret_cast<const char*>(b), 4);
    };
    put_u32(static_cast<std::uint32_t>(mask.num_frames));
    put_u32(static_cast<std::uint32_t>(mask.num_bins));
    for (double v : mask.values) {
        const float fv = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &fv, 4);
        f.write(buf, 4);
    }
    if (!f) throw std::runtime_error("write_msk1: write failed for " + path);
}

SoftMask read_msk1(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_msk1: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "MSK1", 4) != 0)
        throw std::runtime_error("read_msk1: bad magic in " + path);
    auto get_u32 = [&f, &path]() {
        unsigned char b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        if (!f) throw std::runtime_error("read_msk1: truncated header in " + path);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    };
    SoftMask mask;
    mask.num_frames = get_u32();
    mask.num_bins = get_u32();
    mask.values.resize(mask.num_frames * mask.num_bins);
    for (auto& v : mask.values) {
        char buf[4];
        f.read(buf, 4);
        if (!f) throw std::runtime_error("read_msk1: truncated data in " + path);
        float fv;
        std::memcpy(&fv, buf, 4);
        v = static_cast<double>(fv);
    }
    return mask;
}

} // namespace primsep
