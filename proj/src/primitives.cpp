#include "primsep/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "primsep/fft.hpp"

namespace primsep {

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    return v[mid];
}

// Symmetric reflection for filter windows that spill past the raster edge.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const auto sn = static_cast<std::ptrdiff_t>(n);
    while (i < 0 || i >= sn) {
        if (i < 0) i = -i - 1;
        if (i >= sn) i = 2 * sn - i - 1;
    }
    return static_cast<std::size_t>(i);
}

// 50%-overlap tiling; the final patch is clamped to the raster edge so
// coverage is complete.
std::vector<std::size_t> tile_starts(std::size_t extent, std::size_t patch) {
    std::vector<std::size_t> starts;
    const std::size_t hop = std::max<std::size_t>(1, patch / 2);
    std::size_t s = 0;
    for (;;) {
        if (s + patch >= extent) {
            starts.push_back(extent - patch);
            break;
        }
        starts.push_back(s);
        s += hop;
    }
    return starts;
}

struct PatchAccumulator {
    std::vector<double> sum;
    std::vector<double> count;
    std::size_t num_bins = 0;

    PatchAccumulator(std::size_t t, std::size_t f) : sum(t * f, 0.0), count(t * f, 0.0), num_bins(f) {}

    void add(std::size_t t, std::size_t f, double v) {
        sum[t * num_bins + f] += v;
        count[t * num_bins + f] += 1.0;
    }

    SoftMask finish(std::size_t t, std::size_t f) const {
        SoftMask m = make_mask(t, f);
        for (std::size_t i = 0; i < sum.size(); ++i) m.values[i] = sum[i] / count[i];
        return m;
    }
};

void check_patch_fits(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg, const char* op) {
    if (mag.values.empty()) throw std::invalid_argument(std::string(op) + ": empty raster");
    if (cfg.twodft_patch_t > mag.num_frames || cfg.twodft_patch_f > mag.num_bins)
        throw std::invalid_argument(std::string(op) + ": patch larger than raster");
}

} // namespace

void PrimitiveConfig::validate() const {
    auto odd_kernel = [](std::size_t k) { return k >= 3 && k % 2 == 1; };
    if (!odd_kernel(hpss_time_kernel) || !odd_kernel(hpss_freq_kernel))
        throw std::invalid_argument("PrimitiveConfig: hpss kernels must be odd and >= 3");
    if (!(hpss_mask_power > 0.0)) throw std::invalid_argument("PrimitiveConfig: hpss_mask_power must be > 0");
    if (twodft_patch_t < 4 || twodft_patch_f < 4)
        throw std::invalid_argument("PrimitiveConfig: patch extents must be >= 4");
    if (!(twodft_peak_threshold_factor > 0.0))
        throw std::invalid_argument("PrimitiveConfig: peak threshold factor must be > 0");
    if (twodft_zero_rate_halfwidth >= twodft_patch_t / 2)
        throw std::invalid_argument("PrimitiveConfig: zero-rate halfwidth must be < patch_t/2");
    if (!(melodic_f0_min_hz > 0.0) || !(melodic_f0_min_hz < melodic_f0_max_hz))
        throw std::invalid_argument("PrimitiveConfig: need 0 < f0_min < f0_max");
    if (melodic_harmonics < 1) throw std::invalid_argument("PrimitiveConfig: melodic_harmonics must be >= 1");
    if (!(melodic_tolerance_cents > 0.0))
        throw std::invalid_argument("PrimitiveConfig: melodic_tolerance_cents must be > 0");
    if (!(melodic_grid_cents > 0.0))
        throw std::invalid_argument("PrimitiveConfig: melodic_grid_cents must be > 0");
    if (melodic_smooth_lambda < 0.0)
        throw std::invalid_argument("PrimitiveConfig: melodic_smooth_lambda must be >= 0");
    if (!(melodic_voicing_tau > 0.0))
        throw std::invalid_argument("PrimitiveConfig: melodic_voicing_tau must be > 0");
}

PrimitiveConfig load_primitive_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_primitive_config: cannot open " + path);
    PrimitiveConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        if (eq == std::string::npos) {
            if (!trim(line).empty())
                throw std::runtime_error("load_primitive_config: expected key = value at " + path + ":" +
                                         std::to_string(lineno));
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        double num = 0.0;
        try {
            std::size_t used = 0;
            num = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument(value);
        } catch (const std::exception&) {
            throw std::runtime_error("load_primitive_config: bad numeric value '" + value + "' at " + path +
                                     ":" + std::to_string(lineno));
        }
        auto as_size = [&num]() { return static_cast<std::size_t>(num); };
        if (key == "hpss_time_kernel") cfg.hpss_time_kernel = as_size();
        else if (key == "hpss_freq_kernel") cfg.hpss_freq_kernel = as_size();
        else if (key == "hpss_mask_power") cfg.hpss_mask_power = num;
        else if (key == "twodft_patch_t") cfg.twodft_patch_t = as_size();
        else if (key == "twodft_patch_f") cfg.twodft_patch_f = as_size();
        else if (key == "twodft_peak_nbhd_rate") cfg.twodft_peak_nbhd_rate = as_size();
        else if (key == "twodft_peak_nbhd_scale") cfg.twodft_peak_nbhd_scale = as_size();
        else if (key == "twodft_peak_threshold_factor") cfg.twodft_peak_threshold_factor = num;
        else if (key == "twodft_zero_rate_halfwidth") cfg.twodft_zero_rate_halfwidth = as_size();
        else if (key == "melodic_f0_min_hz") cfg.melodic_f0_min_hz = num;
        else if (key == "melodic_f0_max_hz") cfg.melodic_f0_max_hz = num;
        else if (key == "melodic_harmonics") cfg.melodic_harmonics = as_size();
        else if (key == "melodic_tolerance_cents") cfg.melodic_tolerance_cents = num;
        else if (key == "melodic_grid_cents") cfg.melodic_grid_cents = num;
        else if (key == "melodic_smooth_lambda") cfg.melodic_smooth_lambda = num;
        else if (key == "melodic_voicing_tau") cfg.melodic_voicing_tau = num;
        else
            throw std::runtime_error("load_primitive_config: unknown key '" + key + "' at " + path + ":" +
                                     std::to_string(lineno));
    }
    cfg.validate();
    return cfg;
}

SoftMask hpss_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg) {
    cfg.validate();
    const std::size_t t_count = mag.num_frames;
    const std::size_t f_count = mag.num_bins;
    if (mag.values.empty()) throw std::invalid_argument("hpss_mask: empty raster");
    if (cfg.hpss_time_kernel > t_count || cfg.hpss_freq_kernel > f_count)
        throw std::invalid_argument("hpss_mask: raster smaller than kernel");

    // H: median along time per frequency bin (sustained/harmonic guide).
    std::vector<double> harmonic(t_count * f_count);
    {
        const std::size_t k = cfg.hpss_time_kernel;
        const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
        std::vector<double> column(t_count), win(k);
        for (std::size_t f = 0; f < f_count; ++f) {
            for (std::size_t t = 0; t < t_count; ++t) column[t] = mag.at(t, f);
            for (std::size_t t = 0; t < t_count; ++t) {
                for (std::ptrdiff_t d = -half; d <= half; ++d)
                    win[static_cast<std::size_t>(d + half)] =
                        column[reflect_index(static_cast<std::ptrdiff_t>(t) + d, t_count)];
                std::nth_element(win.begin(), win.begin() + static_cast<std::ptrdiff_t>(k / 2), win.end());
                harmonic[t * f_count + f] = win[k / 2];
            }
        }
    }

    // P: median along frequency per frame (transient/fluctuating guide).
    std::vector<double> percussive(t_count * f_count);
    {
        const std::size_t k = cfg.hpss_freq_kernel;
        const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(k / 2);
        std::vector<double> win(k);
        for (std::size_t t = 0; t < t_count; ++t) {
            const double* row = mag.values.data() + t * f_count;
            for (std::size_t f = 0; f < f_count; ++f) {
                for (std::ptrdiff_t d = -half; d <= half; ++d)
                    win[static_cast<std::size_t>(d + half)] =
                        row[reflect_index(static_cast<std::ptrdiff_t>(f) + d, f_count)];
                std::nth_element(win.begin(), win.begin() + static_cast<std::ptrdiff_t>(k / 2), win.end());
                percussive[t * f_count + f] = win[k / 2];
            }
        }
    }

    SoftMask mask = make_mask(t_count, f_count);
    const double p = cfg.hpss_mask_power;
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
        const double hp = std::pow(harmonic[i], p);
        const double pp = std::pow(percussive[i], p);
        const double denom = hp + pp;
        mask.values[i] = denom > 0.0 ? pp / denom : 0.5;
    }
    return mask;
}

SoftMask repetition_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg) {
    cfg.validate();
    check_patch_fits(mag, cfg, "repetition_mask");
    const std::size_t pt = cfg.twodft_patch_t;
    const std::size_t pf = cfg.twodft_patch_f;
    Complex2dFft fft(pt, pf);

    PatchAccumulator acc(mag.num_frames, mag.num_bins);
    std::vector<std::complex<double>> patch(pt * pf), transform(pt * pf), kept(pt * pf), rep(pt * pf);
    std::vector<double> absval(pt * pf);

    const auto t_starts = tile_starts(mag.num_frames, pt);
    const auto f_starts = tile_starts(mag.num_bins, pf);
    for (std::size_t t0 : t_starts) {
        for (std::size_t f0 : f_starts) {
            for (std::size_t t = 0; t < pt; ++t)
                for (std::size_t f = 0; f < pf; ++f)
                    patch[t * pf + f] = {mag.at(t0 + t, f0 + f), 0.0};
            fft.forward(patch.data(), transform.data());
            for (std::size_t i = 0; i < transform.size(); ++i) absval[i] = std::abs(transform[i]);
            const double threshold = cfg.twodft_peak_threshold_factor * median_of(absval);

            // Keep coefficients that are rate-axis peaks above threshold;
            // those model temporally repeating structure.
            const auto nr = static_cast<std::ptrdiff_t>(cfg.twodft_peak_nbhd_rate);
            const auto ns = static_cast<std::ptrdiff_t>(cfg.twodft_peak_nbhd_scale);
            for (std::size_t r = 0; r < pt; ++r) {
                for (std::size_t s = 0; s < pf; ++s) {
                    const double v = absval[r * pf + s];
                    bool peak = v > threshold;
                    for (std::ptrdiff_t dr = -nr; peak && dr <= nr; ++dr) {
                        for (std::ptrdiff_t ds = -ns; peak && ds <= ns; ++ds) {
                            if (dr == 0 && ds == 0) continue;
                            const std::size_t rr =
                                static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r + pt) + dr) % pt;
                            const std::size_t ss =
                                static_cast<std::size_t>(static_cast<std::ptrdiff_t>(s + pf) + ds) % pf;
                            if (absval[rr * pf + ss] > v) peak = false;
                        }
                    }
                    kept[r * pf + s] = peak ? transform[r * pf + s] : std::complex<double>{0.0, 0.0};
                }
            }
            fft.inverse(kept.data(), rep.data());

            for (std::size_t t = 0; t < pt; ++t) {
                for (std::size_t f = 0; f < pf; ++f) {
                    const double orig = mag.at(t0 + t, f0 + f);
                    double vocals;
                    if (orig > 0.0) {
                        const double repeating = std::max(rep[t * pf + f].real(), 0.0);
                        vocals = 1.0 - std::min(1.0, repeating / orig);
                    } else {
                        vocals = 0.5; // no evidence at silent bins
                    }
                    acc.add(t0 + t, f0 + f, vocals);
                }
            }
        }
    }
    return acc.finish(mag.num_frames, mag.num_bins);
}

SoftMask micromodulation_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg) {
    cfg.validate();
    check_patch_fits(mag, cfg, "micromodulation_mask");
    const std::size_t pt = cfg.twodft_patch_t;
    const std::size_t pf = cfg.twodft_patch_f;
    const std::size_t hw = cfg.twodft_zero_rate_halfwidth;
    Complex2dFft fft(pt, pf);

    PatchAccumulator acc(mag.num_frames, mag.num_bins);
    std::vector<std::complex<double>> patch(pt * pf), transform(pt * pf), offband(pt * pf), rec(pt * pf);

    const auto t_starts = tile_starts(mag.num_frames, pt);
    const auto f_starts = tile_starts(mag.num_bins, pf);
    for (std::size_t t0 : t_starts) {
        for (std::size_t f0 : f_starts) {
            for (std::size_t t = 0; t < pt; ++t)
                for (std::size_t f = 0; f < pf; ++f)
                    patch[t * pf + f] = {mag.at(t0 + t, f0 + f), 0.0};
            fft.forward(patch.data(), transform.data());

            // Zero the zero-rate band (steady and sub-patch-rate content);
            // the inverse transform is the temporally modulated component.
            for (std::size_t r = 0; r < pt; ++r) {
                const bool in_band = r <= hw || r >= pt - hw;
                for (std::size_t s = 0; s < pf; ++s)
                    offband[r * pf + s] = in_band ? std::complex<double>{0.0, 0.0}
                                                  : transform[r * pf + s];
            }
            fft.inverse(offband.data(), rec.data());

            // Per-bin modulation index: sinusoid-equivalent amplitude of the
            // modulated component over the bin's temporal mean. Full-depth
            // amplitude modulation scores 1, steady content 0.
            for (std::size_t f = 0; f < pf; ++f) {
                double dc = 0.0, ac_energy = 0.0;
                for (std::size_t t = 0; t < pt; ++t) {
                    dc += mag.at(t0 + t, f0 + f);
                    const double v = rec[t * pf + f].real();
                    ac_energy += v * v;
                }
                dc /= static_cast<double>(pt);
                const double ac_rms = std::sqrt(ac_energy / static_cast<double>(pt));
                const double vocals =
                    dc > 0.0 ? std::min(1.0, std::sqrt(2.0) * ac_rms / dc) : 0.5;
                for (std::size_t t = 0; t < pt; ++t) acc.add(t0 + t, f0 + f, vocals);
            }
        }
    }
    return acc.finish(mag.num_frames, mag.num_bins);
}

MelodicAnalysis melodic_analysis(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg) {
    cfg.validate();
    if (mag.values.empty()) throw std::invalid_argument("melodic_analysis: empty raster");
    const double nyquist = 0.5 * mag.sample_rate;
    if (cfg.melodic_f0_max_hz * static_cast<double>(cfg.melodic_harmonics) > nyquist)
        throw std::invalid_argument("melodic_analysis: f0 range exceeds Nyquist / harmonics");

    const std::size_t t_count = mag.num_frames;
    const std::size_t f_count = mag.num_bins;
    const double total_cents = 1200.0 * std::log2(cfg.melodic_f0_max_hz / cfg.melodic_f0_min_hz);
    const std::size_t grid_size = static_cast<std::size_t>(total_cents / cfg.melodic_grid_cents) + 1;

    std::vector<double> grid_hz(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i)
        grid_hz[i] = cfg.melodic_f0_min_hz *
                     std::exp2(static_cast<double>(i) * cfg.melodic_grid_cents / 1200.0);

    // Harmonic bin lookups per grid point.
    const double hz_to_bin = static_cast<double>(mag.window_length) / mag.sample_rate;
    const std::size_t harmonics = cfg.melodic_harmonics;
    std::vector<std::size_t> harmonic_bin(grid_size * harmonics);
    for (std::size_t i = 0; i < grid_size; ++i)
        for (std::size_t h = 0; h < harmonics; ++h) {
            auto bin = static_cast<std::size_t>(std::lround(grid_hz[i] * static_cast<double>(h + 1) * hz_to_bin));
            harmonic_bin[i * harmonics + h] = std::min(bin, f_count - 1);
        }

    // Salience: harmonically weighted sum of magnitudes, weights 1/h.
    std::vector<double> salience(t_count * grid_size, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        const double* row = mag.values.data() + t * f_count;
        double* srow = salience.data() + t * grid_size;
        for (std::size_t i = 0; i < grid_size; ++i) {
            double s = 0.0;
            for (std::size_t h = 0; h < harmonics; ++h)
                s += row[harmonic_bin[i * harmonics + h]] / static_cast<double>(h + 1);
            srow[i] = s;
        }
    }

    // Viterbi-style smoothing with a cost linear in the pitch jump. The
    // linear cost admits an O(grid) two-sweep max computation per frame.
    const double cost_per_step =
        cfg.melodic_smooth_lambda * median_of(salience) * cfg.melodic_grid_cents / 100.0;
    std::vector<double> dp_prev(salience.begin(), salience.begin() + static_cast<std::ptrdiff_t>(grid_size));
    std::vector<double> dp_cur(grid_size), best_left(grid_size), best_right(grid_size);
    std::vector<std::uint32_t> arg_left(grid_size), arg_right(grid_size);
    std::vector<std::uint32_t> parent(t_count * grid_size, 0);

    for (std::size_t t = 1; t < t_count; ++t) {
        best_left[0] = dp_prev[0];
        arg_left[0] = 0;
        for (std::size_t i = 1; i < grid_size; ++i) {
            const double carried = best_left[i - 1] - cost_per_step;
            if (dp_prev[i] >= carried) {
                best_left[i] = dp_prev[i];
                arg_left[i] = static_cast<std::uint32_t>(i);
            } else {
                best_left[i] = carried;
                arg_left[i] = arg_left[i - 1];
            }
        }
        best_right[grid_size - 1] = dp_prev[grid_size - 1];
        arg_right[grid_size - 1] = static_cast<std::uint32_t>(grid_size - 1);
        for (std::size_t i = grid_size - 1; i-- > 0;) {
            const double carried = best_right[i + 1] - cost_per_step;
            if (dp_prev[i] >= carried) {
                best_right[i] = dp_prev[i];
                arg_right[i] = static_cast<std::uint32_t>(i);
            } else {
                best_right[i] = carried;
                arg_right[i] = arg_right[i + 1];
            }
        }
        const double* srow = salience.data() + t * grid_size;
        std::uint32_t* prow = parent.data() + t * grid_size;
        for (std::size_t i = 0; i < grid_size; ++i) {
            if (best_left[i] >= best_right[i]) {
                dp_cur[i] = srow[i] + best_left[i];
                prow[i] = arg_left[i];
            } else {
                dp_cur[i] = srow[i] + best_right[i];
                prow[i] = arg_right[i];
            }
        }
        dp_prev.swap(dp_cur);
    }

    std::size_t best_end = 0;
    for (std::size_t i = 1; i < grid_size; ++i)
        if (dp_prev[i] > dp_prev[best_end]) best_end = i;

    std::vector<std::size_t> path(t_count);
    path[t_count - 1] = best_end;
    for (std::size_t t = t_count - 1; t-- > 0;) path[t] = parent[(t + 1) * grid_size + path[t + 1]];

    MelodicAnalysis out;
    out.contour_hz.resize(t_count);
    out.frame_salience.resize(t_count);
    out.voiced.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        out.contour_hz[t] = grid_hz[path[t]];
        const double* srow = salience.data() + t * grid_size;
        out.frame_salience[t] = *std::max_element(srow, srow + grid_size);
    }
    const double median_frame = median_of(out.frame_salience);
    for (std::size_t t = 0; t < t_count; ++t)
        out.voiced[t] = out.frame_salience[t] > 0.0 &&
                        out.frame_salience[t] >= cfg.melodic_voicing_tau * median_frame;
    return out;
}

SoftMask melodic_mask(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg) {
    const MelodicAnalysis analysis = melodic_analysis(mag, cfg);
    const std::size_t t_count = mag.num_frames;
    const std::size_t f_count = mag.num_bins;
    const double bin_to_hz = static_cast<double>(mag.sample_rate) / mag.window_length;
    const double tol = cfg.melodic_tolerance_cents;

    SoftMask mask = make_mask(t_count, f_count, 0.0);
    for (std::size_t t = 0; t < t_count; ++t) {
        if (!analysis.voiced[t]) continue;
        const double f0 = analysis.contour_hz[t];
        double* row = mask.values.data() + t * f_count;
        for (std::size_t h = 1; h <= cfg.melodic_harmonics; ++h) {
            const double fh = f0 * static_cast<double>(h);
            const double lo_hz = fh * std::exp2(-2.0 * tol / 1200.0);
            const double hi_hz = fh * std::exp2(2.0 * tol / 1200.0);
            const auto lo_bin = static_cast<std::size_t>(std::max(1.0, std::ceil(lo_hz / bin_to_hz)));
            const auto hi_bin = std::min(f_count - 1,
                                         static_cast<std::size_t>(std::floor(hi_hz / bin_to_hz)));
            for (std::size_t f = lo_bin; f <= hi_bin; ++f) {
                const double bin_hz = static_cast<double>(f) * bin_to_hz;
                const double dc = std::abs(1200.0 * std::log2(bin_hz / fh));
                double w = 0.0;
                if (dc <= tol) w = 1.0;
                else if (dc <= 2.0 * tol) w = 0.5 * (1.0 + std::cos(M_PI * (dc - tol) / tol));
                if (w > row[f]) row[f] = w;
            }
        }
    }
    return mask;
}

const std::vector<std::string>& primitive_names() {
    static const std::vector<std::string> names = {"hpss", "repetition", "micromodulation", "melodic"};
    return names;
}

std::vector<SoftMask> run_all_primitives(const MagnitudeSpectrogram& mag, const PrimitiveConfig& cfg) {
    std::vector<SoftMask> masks;
    masks.reserve(4);
    masks.push_back(hpss_mask(mag, cfg));
    masks.push_back(repetition_mask(mag, cfg));
    masks.push_back(micromodulation_mask(mag, cfg));
    masks.push_back(melodic_mask(mag, cfg));
    return masks;
}

} // namespace primsep
