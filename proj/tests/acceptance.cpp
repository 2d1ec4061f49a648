// Acceptance suite: one line per criterion, nonzero exit if any fail.
// Covers the math contracts (distance softmax, silhouette, posterior
// strength), signal-path exactness (reconstruction, remix fidelity), metric
// definitions, and two behavioral reproductions on synthetic scenes
// (confidence-vs-SDR correlation, ensemble-beats-singles).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "primsep/bootstrap.hpp"
#include "primsep/confidence.hpp"
#include "primsep/ensemble.hpp"
#include "primsep/eval.hpp"
#include "primsep/rng.hpp"
#include "synth.hpp"

using namespace primsep;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            detail = msg;
        }
    }
    void note(const std::string& msg) {
        if (detail.empty()) detail = msg;
    }
};

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("primsep_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

EmbeddingTensor single_point(const std::vector<double>& coords) {
    EmbeddingTensor emb;
    emb.num_frames = 1;
    emb.num_bins = 1;
    emb.dims = coords.size();
    emb.values = coords;
    return emb;
}

// --- criterion 1: distance-softmax exactness ----------------------------

Check criterion_membership_exactness() {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    Rng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t dims = 1 + rng.next_below(6);
        std::vector<double> point(dims);
        for (auto& v : point) v = rng.next_real();
        for (const double beta : {0.1, 5.0, 500.0}) {
            const ClusterResult result = primitive_cluster(single_point(point), beta);
            const double sum = result.vocals.values[0] + result.accompaniment.values[0];
            check.require(std::abs(sum - 1.0) <= 1e-9, "membership sum off by more than 1e-9");

            long double d0 = 0.0L, d1 = 0.0L;
            for (double v : point) {
                d0 += static_cast<long double>(v) * v;
                d1 += (1.0L - v) * (1.0L - v);
            }
            const long double e0 = std::exp(-static_cast<long double>(beta) * std::sqrt(d0));
            const long double e1 = std::exp(-static_cast<long double>(beta) * std::sqrt(d1));
            const double direct = static_cast<double>(e1 / (e0 + e1));
            worst = std::max(worst, std::abs(result.vocals.values[0] - direct));
        }
    }
    check.require(worst <= 1e-9, "deviation from direct evaluation exceeds 1e-9");
    const double secs = elapsed_seconds(start);
    check.require(secs < 1.0, "runtime exceeded 1 s");
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max dev %.2e, %.2f s", worst, secs);
    check.note(buf);
    return check;
}

// --- criterion 2: silhouette oracle equivalence --------------------------

std::vector<double> silhouette_transcription(const std::vector<std::vector<double>>& points,
                                             const std::vector<std::uint8_t>& labels) {
    const std::size_t n = points.size();
    auto dist = [&points](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (std::size_t d = 0; d < points[i].size(); ++d) {
            const double diff = points[i][d] - points[j][d];
            s += diff * diff;
        }
        return std::sqrt(s);
    };
    std::size_t count[2] = {0, 0};
    for (auto l : labels) ++count[l];
    std::vector<double> scores(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (count[labels[i]] <= 1) continue;
        double sums[2] = {0.0, 0.0};
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) sums[labels[j]] += dist(i, j);
        const double a = sums[labels[i]] / static_cast<double>(count[labels[i]] - 1);
        const double b = sums[1 - labels[i]] / static_cast<double>(count[1 - labels[i]]);
        scores[i] = (b - a) / std::max(a, b);
    }
    return scores;
}

Check criterion_silhouette_oracle() {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    Rng rng(4096);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 4 + rng.next_below(197);
        const std::size_t dims = 1 + rng.next_below(4);
        std::vector<std::vector<double>> points(n, std::vector<double>(dims));
        std::vector<std::uint8_t> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& v : points[i]) v = rng.next_real();
            labels[i] = static_cast<std::uint8_t>(rng.next_below(2));
        }
        labels[0] = 0;
        labels[1] = 1; // both clusters occupied
        const auto ours = silhouette_scores(points, labels);
        const auto oracle = silhouette_transcription(points, labels);
        for (std::size_t i = 0; i < n; ++i)
            check.require(ours[i] == oracle[i], "module and oracle silhouettes differ");
    }

    const std::vector<std::vector<double>> hand = {{0.0}, {0.1}, {1.0}, {1.1}};
    const auto scores = silhouette_scores(hand, {0, 0, 1, 1});
    check.require(std::abs(scores[0] - 0.904762) <= 1e-6, "hand-worked case off by more than 1e-6");
    const double secs = elapsed_seconds(start);
    check.require(secs < 10.0, "runtime exceeded 10 s");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "200 datasets exact, %.2f s", secs);
    check.note(buf);
    return check;
}

// --- criterion 3: posterior strength endpoints ---------------------------

Check criterion_posterior_endpoints() {
    Check check;
    for (std::size_t k = 2; k <= 5; ++k) {
        std::vector<double> uniform(k, 1.0 / static_cast<double>(k));
        check.require(posterior_strength(uniform) == 0.0, "uniform gamma must map to exactly 0");
        std::vector<double> certain(k, 0.0);
        certain[0] = 1.0;
        check.require(posterior_strength(certain) == 1.0, "certain gamma must map to exactly 1");
    }
    check.note("K in {2..5} endpoints exact");
    return check;
}

// --- criterion 4: reconstruction ------------------------------------------

Check criterion_reconstruction() {
    Check check;
    double worst_rt = 0.0, worst_sum = 0.0;

    Rng rng(11);
    std::vector<double> noise(3 * 44100);
    for (auto& v : noise) v = rng.next_real(-0.5, 0.5);
    synth::SceneParams params;
    params.duration_seconds = 4.0;
    params.seed = 7;
    const synth::Scene scene = synth::make_scene(params);

    const std::vector<const std::vector<double>*> signals = {&noise, &scene.mixture};
    for (const std::vector<double>* signal : signals) {
        const AudioClip clip = make_mono_clip(*signal);
        const AudioClip round = istft(stft(clip), signal->size());
        for (std::size_t i = 0; i < signal->size(); ++i)
            worst_rt = std::max(worst_rt, std::abs(round.samples[0][i] - (*signal)[i]));

        const SeparationResult sep = separate(clip, PrimitiveConfig{});
        for (std::size_t i = 0; i < signal->size(); ++i)
            worst_sum = std::max(worst_sum,
                                 std::abs(sep.vocals.samples[0][i] +
                                          sep.accompaniment.samples[0][i] - (*signal)[i]));
    }
    check.require(worst_rt < 1e-6, "istft(stft(x)) error exceeds 1e-6");
    check.require(worst_sum < 1e-6, "vocals + accompaniment misses the input by more than 1e-6");
    char buf[96];
    std::snprintf(buf, sizeof(buf), "round trip %.2e, separation sum %.2e", worst_rt, worst_sum);
    check.note(buf);
    return check;
}

// --- criterion 5: remix fidelity -------------------------------------------

Check criterion_remix_fidelity() {
    Check check;
    const fs::path dir = scratch_dir("remix");

    std::vector<SourceEstimate> pool;
    for (int i = 0; i < 4; ++i) {
        Rng rng(500 + i);
        std::vector<double> vocals(16 * 44100), accomp(16 * 44100);
        for (auto& v : vocals) v = rng.next_real(-0.4, 0.4);
        for (auto& v : accomp) v = rng.next_real(-0.4, 0.4);
        SourceEstimate est;
        est.id = "est" + std::to_string(i);
        est.origin_mixture = i < 2 ? "mixA" : "mixB";
        est.confidence = 0.5 + 0.1 * i;
        est.report.confidence = est.confidence;
        est.vocals_path = (dir / (est.id + "_vocals.wav")).string();
        est.accompaniment_path = (dir / (est.id + "_accompaniment.wav")).string();
        save_audio(make_mono_clip(vocals), est.vocals_path, BitDepth::Float32);
        save_audio(make_mono_clip(accomp), est.accompaniment_path, BitDepth::Float32);
        pool.push_back(est);
    }

    DatasetOptions options;
    options.count = 100;
    options.seed = 31337;
    const DatasetManifest manifest = build_dataset(pool, (dir / "run1").string(), options);
    check.require(manifest.entries.size() == 100, "expected 100 manifest entries");

    double worst_snr = 0.0;
    for (const auto& entry : manifest.entries) {
        check.require(entry.target_snr_db >= -2.5 && entry.target_snr_db <= 2.5,
                      "target SNR outside [-2.5, 2.5] dB");
        const AudioClip mix = load_audio((dir / "run1" / entry.mixture_path).string());
        const AudioClip vr = load_audio((dir / "run1" / entry.vocal_ref_path).string());
        const AudioClip ar = load_audio((dir / "run1" / entry.accomp_ref_path).string());
        double pv = 0.0, pa = 0.0;
        for (std::size_t i = 0; i < mix.num_samples(); ++i) {
            pv += vr.samples[0][i] * vr.samples[0][i];
            pa += ar.samples[0][i] * ar.samples[0][i];
            // Storage-precision exactness: the mixture sample is the float32
            // sum of the emitted reference samples.
            const float expected = static_cast<float>(vr.samples[0][i] + ar.samples[0][i]);
            check.require(static_cast<float>(mix.samples[0][i]) == expected,
                          "mixture != vocal_ref + accomp_ref in storage precision");
        }
        const double achieved = 10.0 * std::log10(pv / pa);
        worst_snr = std::max(worst_snr, std::abs(achieved - entry.target_snr_db));
    }
    check.require(worst_snr < 1e-6, "achieved SNR misses target by more than 1e-6 dB");

    build_dataset(pool, (dir / "run2").string(), options);
    check.require(slurp(dir / "run1" / "manifest.json") == slurp(dir / "run2" / "manifest.json"),
                  "manifest bytes differ across reruns");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "100 remixes, worst SNR dev %.2e dB", worst_snr);
    check.note(buf);
    return check;
}

// --- criterion 6: metric correctness ---------------------------------------

Check criterion_metric_correctness() {
    Check check;
    Rng rng(97);
    std::vector<double> s(3000);
    for (auto& v : s) v = rng.next_real(-1.0, 1.0);
    std::vector<double> half(s);
    for (auto& v : half) v *= 0.5;
    check.require(std::abs(sd_sdr(s, half)) < 1e-12, "sd_sdr(s, 0.5 s) must be 0 dB");
    check.require(std::isinf(si_sdr(s, half)) && si_sdr(s, half) > 0,
                  "si_sdr(s, 0.5 s) must be +inf");

    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> ref(128), est(128);
        for (auto& v : ref) v = rng.next_real(-1.0, 1.0);
        for (std::size_t i = 0; i < est.size(); ++i)
            est[i] = ref[i] * rng.next_real(0.1, 2.0) + rng.next_real(-0.5, 0.5);
        check.require(si_sdr(ref, est) >= sd_sdr(ref, est), "si_sdr < sd_sdr");
    }
    check.note("0.5-scale pair + 1000 random dominance checks");
    return check;
}

// --- criterion 7: confidence-vs-SDR correlation ----------------------------

Check criterion_confidence_correlation() {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> confidence, accomp_sdr;
    const int scenes = 44;
    for (int i = 0; i < scenes; ++i) {
        // Difficulty degrades the cues themselves (vibrato, tremolo, loop
        // regularity, noise, wobble) at near-constant source balance, so
        // accompaniment SDR tracks separation quality, not source ratio.
        const double d = static_cast<double>(i) / (scenes - 1);
        synth::SceneParams params;
        params.duration_seconds = 4.0;
        params.vocal_gain_db = -1.5 * d;
        params.vibrato_cents = 35.0 - 32.0 * d;
        params.tremolo_depth = 0.8 - 0.75 * d;
        params.loop_jitter = 0.9 * d;
        params.percussion_gain = 0.2 + 0.3 * d;
        params.noise_db = -38.0 + 24.0 * d;
        params.wobble_gain = 0.8 * d;
        params.seed = 1000 + static_cast<std::uint64_t>(i);
        const synth::Scene scene = synth::make_scene(params);

        const SeparationResult sep = separate(make_mono_clip(scene.mixture), PrimitiveConfig{});
        const ConfidenceReport report = confidence_report(
            sep.embedding, sep.assignment, sep.mixture_magnitude, 1000,
            77 + static_cast<std::uint64_t>(i));
        confidence.push_back(report.confidence);
        accomp_sdr.push_back(sd_sdr(scene.accompaniment, sep.accompaniment.samples[0]));
    }
    const RegressionResult regression = correlation_report(confidence, accomp_sdr);
    check.require(regression.r_value > 0.3, "accompaniment r <= 0.3");
    check.require(regression.p_value < 0.05, "accompaniment p >= 0.05");
    const double secs = elapsed_seconds(start);
    check.require(secs < 600.0, "runtime exceeded 10 min");
    char buf[96];
    std::snprintf(buf, sizeof(buf), "44 scenes, r=%.3f p=%.2e, %.0f s", regression.r_value,
                  regression.p_value, secs);
    check.note(buf);
    return check;
}

// --- criterion 8: ensemble beats every single primitive --------------------

Check criterion_ensemble_beats_singles() {
    Check check;
    // Non-repeating two-voice melody with vibrato/tremolo over a non-melodic
    // accompaniment (re-struck chord + wobble pad), so each cue is
    // informative somewhere and misleading somewhere else.
    synth::SceneParams params;
    params.duration_seconds = 4.0;
    params.vocal_gain_db = 0.0;
    params.vibrato_cents = 30.0;
    params.tremolo_depth = 0.85;
    params.harmony_gain = 1.0;
    params.percussion_gain = 0.0;
    params.ostinato_gain = 1.0;
    params.wobble_gain = 1.0;
    params.noise_db = -40.0;
    params.seed = 67;
    const synth::Scene scene = synth::make_scene(params);

    const AudioClip clip = make_mono_clip(scene.mixture);
    const ComplexSpectrogram spec = stft(clip);
    const MagnitudeSpectrogram mag = magnitude(spec);
    const PrimitiveConfig cfg;
    const auto masks = run_all_primitives(mag, cfg);

    auto mean_sdr = [&](const SoftMask& mask) {
        const AudioClip vocals = istft(apply_mask(spec, mask), scene.mixture.size());
        const AudioClip accomp = istft(apply_mask(spec, complement(mask)), scene.mixture.size());
        return 0.5 * (sd_sdr(scene.vocals, vocals.samples[0]) +
                      sd_sdr(scene.accompaniment, accomp.samples[0]));
    };

    const ClusterResult fused = primitive_cluster(embed(masks), kDefaultBeta);
    const double ensemble = mean_sdr(fused.vocals);
    std::string summary = "ensemble " + std::to_string(ensemble).substr(0, 5) + " dB vs";
    for (std::size_t d = 0; d < masks.size(); ++d) {
        const double single = mean_sdr(masks[d]);
        summary += " " + primitive_names()[d] + " " + std::to_string(single).substr(0, 5);
        check.require(ensemble >= single,
                      "ensemble below single primitive " + primitive_names()[d]);
    }
    check.note(summary);
    return check;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {"1 membership exactness vs direct evaluation", criterion_membership_exactness},
        {"2 silhouette oracle equivalence", criterion_silhouette_oracle},
        {"3 posterior strength endpoints", criterion_posterior_endpoints},
        {"4 reconstruction round trips", criterion_reconstruction},
        {"5 remix fidelity and reproducibility", criterion_remix_fidelity},
        {"6 SDR metric correctness", criterion_metric_correctness},
        {"7 confidence predicts accompaniment SDR", criterion_confidence_correlation},
        {"8 ensemble beats each single primitive", criterion_ensemble_beats_singles},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        Check check;
        try {
            check = criterion.run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %s%s%s\n", check.ok ? "PASS" : "FAIL", criterion.name,
                    check.detail.empty() ? "" : " -- ", check.detail.c_str());
        std::fflush(stdout);
        if (!check.ok) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
