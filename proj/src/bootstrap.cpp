#include "primsep/bootstrap.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <thread>

#include "primsep/ensemble.hpp"
#include "primsep/rng.hpp"

namespace primsep {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

double rms_db(const std::vector<double>& x) {
    if (x.empty()) return -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (double v : x) sum += v * v;
    const double rms = std::sqrt(sum / static_cast<double>(x.size()));
    return rms > 0.0 ? 20.0 * std::log10(rms) : -std::numeric_limits<double>::infinity();
}

double snippet_power(const std::vector<double>& x, std::size_t offset, std::size_t len) {
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) sum += x[offset + i] * x[offset + i];
    return sum;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

json report_to_json(const ConfidenceReport& r) {
    return json{{"silhouette", r.silhouette_mean},
                {"posterior_strength", r.posterior_strength_mean},
                {"confidence", r.confidence},
                {"n", r.n_sampled},
                {"seed", r.seed},
                {"degenerate", r.degenerate}};
}

ConfidenceReport report_from_json(const json& j) {
    ConfidenceReport r;
    r.silhouette_mean = j.at("silhouette").get<double>();
    r.posterior_strength_mean = j.at("posterior_strength").get<double>();
    r.confidence = j.at("confidence").get<double>();
    r.n_sampled = j.at("n").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.degenerate = j.value("degenerate", false);
    return r;
}

// Confidence-ascending order with a deterministic id tie-break.
bool confidence_less(const SourceEstimate& a, const SourceEstimate& b) {
    if (a.confidence != b.confidence) return a.confidence < b.confidence;
    return a.id < b.id;
}

} // namespace

std::vector<std::pair<double, AudioClip>> segment_clip(const AudioClip& clip,
                                                       const SegmenterParams& params) {
    clip.validate();
    if (!clip.is_mono()) throw std::invalid_argument("segment_clip: clip must be mono");
    if (!(params.length_seconds > params.overlap_seconds) || params.overlap_seconds < 0.0)
        throw std::invalid_argument("segment_clip: need length > overlap >= 0");

    const auto sr = static_cast<double>(clip.sample_rate);
    const auto seg_len = static_cast<std::size_t>(std::llround(params.length_seconds * sr));
    const auto hop = static_cast<std::size_t>(
        std::llround((params.length_seconds - params.overlap_seconds) * sr));
    const std::vector<double>& x = clip.samples[0];

    std::vector<std::pair<double, AudioClip>> segments;
    for (std::size_t off = 0; off + seg_len <= x.size(); off += hop) {
        std::vector<double> piece(x.begin() + static_cast<std::ptrdiff_t>(off),
                                  x.begin() + static_cast<std::ptrdiff_t>(off + seg_len));
        if (rms_db(piece) < params.quiet_threshold_db) continue;
        segments.emplace_back(static_cast<double>(off) / sr,
                              make_mono_clip(std::move(piece), clip.sample_rate));
    }
    return segments;
}

CorpusResult separate_corpus(const std::vector<std::string>& paths, const std::string& out_dir,
                             const CorpusOptions& options) {
    options.primitive_config.validate();
    fs::create_directories(out_dir);

    struct FileOutcome {
        std::vector<SourceEstimate> estimates;
        std::string error;
    };
    std::vector<FileOutcome> outcomes(paths.size());

    auto process_file = [&](std::size_t file_index) {
        FileOutcome& outcome = outcomes[file_index];
        try {
            const AudioClip raw = load_audio(paths[file_index]);
            const AudioClip mono = downmix(raw);
            const std::string stem = fs::path(paths[file_index]).stem().string();
            const auto segments = segment_clip(mono, options.segmenter);
            std::size_t seg_index = 0;
            for (const auto& [offset_s, piece] : segments) {
                const std::uint64_t seg_seed =
                    derive_seed(derive_seed(options.seed, file_index), seg_index++);
                SeparationResult sep = separate(piece, options.primitive_config, options.beta);
                const ConfidenceReport report =
                    confidence_report(sep.embedding, sep.assignment, sep.mixture_magnitude,
                                      options.silhouette_n, seg_seed);

                SourceEstimate est;
                const auto offset_ms = static_cast<long long>(std::llround(offset_s * 1000.0));
                est.id = stem + "_t" + std::to_string(offset_ms);
                est.origin_mixture = stem;
                est.offset_seconds = offset_s;
                est.report = report;
                est.confidence = report.confidence;
                est.vocals_path = (fs::path(out_dir) / (est.id + "_vocals.wav")).string();
                est.accompaniment_path =
                    (fs::path(out_dir) / (est.id + "_accompaniment.wav")).string();
                save_audio(sep.vocals, est.vocals_path, BitDepth::Float32);
                save_audio(sep.accompaniment, est.accompaniment_path, BitDepth::Float32);
                outcome.estimates.push_back(std::move(est));
            }
        } catch (const std::exception& e) {
            outcome.error = paths[file_index] + ": " + e.what();
        }
    };

    const std::size_t jobs = std::max<std::size_t>(1, options.jobs);
    if (jobs == 1 || paths.size() <= 1) {
        for (std::size_t i = 0; i < paths.size(); ++i) process_file(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> workers;
        const std::size_t worker_count = std::min(jobs, paths.size());
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w)
            workers.emplace_back([&]() {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= paths.size()) return;
                    process_file(i);
                }
            });
        for (auto& w : workers) w.join();
    }

    CorpusResult result;
    for (auto& outcome : outcomes) {
        if (!outcome.error.empty()) result.failures.push_back(outcome.error);
        for (auto& est : outcome.estimates) result.estimates.push_back(std::move(est));
    }
    write_pool_manifest(result.estimates, (fs::path(out_dir) / "pool.json").string());
    return result;
}

void write_pool_manifest(const std::vector<SourceEstimate>& pool, const std::string& path) {
    json entries = json::array();
    for (const auto& est : pool) {
        entries.push_back(json{{"id", est.id},
                               {"origin_mixture", est.origin_mixture},
                               {"offset_seconds", est.offset_seconds},
                               {"vocals_path", est.vocals_path},
                               {"accompaniment_path", est.accompaniment_path},
                               {"confidence", est.confidence},
                               {"report", report_to_json(est.report)}});
    }
    const json doc = {{"version", "1"}, {"estimates", entries}};
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("write_pool_manifest: cannot open " + path);
    f << doc.dump(2) << "\n";
}

std::vector<SourceEstimate> read_pool_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_pool_manifest: cannot open " + path);
    json doc = json::parse(f);
    std::vector<SourceEstimate> pool;
    for (const auto& j : doc.at("estimates")) {
        SourceEstimate est;
        est.id = j.at("id").get<std::string>();
        est.origin_mixture = j.at("origin_mixture").get<std::string>();
        est.offset_seconds = j.at("offset_seconds").get<double>();
        est.vocals_path = j.at("vocals_path").get<std::string>();
        est.accompaniment_path = j.at("accompaniment_path").get<std::string>();
        est.confidence = j.at("confidence").get<double>();
        est.report = report_from_json(j.at("report"));
        pool.push_back(std::move(est));
    }
    return pool;
}

std::vector<SourceEstimate> filter_by_confidence(const std::vector<SourceEstimate>& pool,
                                                 double drop_fraction) {
    if (pool.empty()) throw std::invalid_argument("filter_by_confidence: empty pool");
    if (drop_fraction < 0.0 || drop_fraction >= 1.0)
        throw std::invalid_argument("filter_by_confidence: drop_fraction must be in [0, 1)");
    std::vector<SourceEstimate> sorted = pool;
    std::sort(sorted.begin(), sorted.end(), confidence_less);
    const auto dropped =
        static_cast<std::size_t>(std::floor(drop_fraction * static_cast<double>(sorted.size())));
    sorted.erase(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(dropped));
    return sorted;
}

std::vector<SourceEstimate> select_quartile(const std::vector<SourceEstimate>& pool, int quartile) {
    if (pool.empty()) throw std::invalid_argument("select_quartile: empty pool");
    if (quartile < 1 || quartile > 4)
        throw std::invalid_argument("select_quartile: quartile must be 1..4");
    std::vector<SourceEstimate> sorted = pool;
    std::sort(sorted.begin(), sorted.end(), confidence_less);
    const std::size_t n = sorted.size();
    const std::size_t lo = (static_cast<std::size_t>(quartile) - 1) * n / 4;
    const std::size_t hi = static_cast<std::size_t>(quartile) * n / 4;
    return {sorted.begin() + static_cast<std::ptrdiff_t>(lo),
            sorted.begin() + static_cast<std::ptrdiff_t>(hi)};
}

std::optional<RemixClips> remix_clips(const AudioClip& vocal, const AudioClip& accomp,
                                      double snippet_seconds, double target_snr_db,
                                      std::uint64_t seed) {
    vocal.validate();
    accomp.validate();
    if (!vocal.is_mono() || !accomp.is_mono())
        throw std::invalid_argument("remix: sources must be mono");
    if (vocal.sample_rate != accomp.sample_rate)
        throw std::invalid_argument("remix: sample rate mismatch");
    const auto sr = static_cast<double>(vocal.sample_rate);
    const auto snip = static_cast<std::size_t>(std::llround(snippet_seconds * sr));
    if (snip == 0 || vocal.num_samples() < snip || accomp.num_samples() < snip)
        throw std::invalid_argument("remix: source shorter than snippet");

    Rng rng(seed);
    auto draw_offset = [&rng, snip](const std::vector<double>& x) -> std::optional<std::size_t> {
        for (int attempt = 0; attempt < 10; ++attempt) {
            const auto off = static_cast<std::size_t>(rng.next_below(x.size() - snip + 1));
            if (snippet_power(x, off, snip) > 0.0) return off;
        }
        return std::nullopt;
    };

    const auto v_off = draw_offset(vocal.samples[0]);
    if (!v_off) return std::nullopt;
    const auto a_off = draw_offset(accomp.samples[0]);
    if (!a_off) return std::nullopt;

    const double pv = snippet_power(vocal.samples[0], *v_off, snip);
    const double pa = snippet_power(accomp.samples[0], *a_off, snip);
    const double current_snr_db = 10.0 * std::log10(pv / pa);
    const double gain = std::pow(10.0, (target_snr_db - current_snr_db) / 20.0);

    RemixClips out;
    out.vocal_gain = gain;
    out.vocal_offset_seconds = static_cast<double>(*v_off) / sr;
    out.accomp_offset_seconds = static_cast<double>(*a_off) / sr;
    std::vector<double> vr(snip), ar(snip), mix(snip);
    for (std::size_t i = 0; i < snip; ++i) {
        // Quantize the refs to float32 up front: the emitted WAVs then carry
        // exactly these values and mixture == vocal_ref + accomp_ref holds
        // sample-exactly in memory.
        vr[i] = static_cast<double>(static_cast<float>(gain * vocal.samples[0][*v_off + i]));
        ar[i] = static_cast<double>(static_cast<float>(accomp.samples[0][*a_off + i]));
        mix[i] = vr[i] + ar[i];
    }
    out.vocal_ref = make_mono_clip(std::move(vr), vocal.sample_rate);
    out.accomp_ref = make_mono_clip(std::move(ar), vocal.sample_rate);
    out.mixture = make_mono_clip(std::move(mix), vocal.sample_rate);
    return out;
}

std::optional<RemixClips> remix(const SourceEstimate& vocal_source,
                                const SourceEstimate& accomp_source, double snippet_seconds,
                                double target_snr_db, std::uint64_t seed) {
    if (vocal_source.origin_mixture == accomp_source.origin_mixture)
        throw std::invalid_argument("remix: vocal and accompaniment share an origin mixture");
    const AudioClip vocal = load_audio(vocal_source.vocals_path);
    const AudioClip accomp = load_audio(accomp_source.accompaniment_path);
    return remix_clips(vocal, accomp, snippet_seconds, target_snr_db, seed);
}

std::string pool_fingerprint(const std::vector<SourceEstimate>& pool) {
    json j = json::array();
    for (const auto& est : pool) j.push_back(json{{"id", est.id}, {"confidence", est.confidence}});
    return hex64(fnv1a64(j.dump()));
}

DatasetManifest build_dataset(const std::vector<SourceEstimate>& pool, const std::string& out_dir,
                              const DatasetOptions& options) {
    if (options.count == 0) throw std::invalid_argument("build_dataset: count must be > 0");
    if (!(options.snr_min_db <= options.snr_max_db))
        throw std::invalid_argument("build_dataset: bad SNR range");

    std::vector<std::string> origins;
    for (const auto& est : pool) origins.push_back(est.origin_mixture);
    std::sort(origins.begin(), origins.end());
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    if (pool.size() < 2 || origins.size() < 2)
        throw std::invalid_argument("build_dataset: pool needs >= 2 estimates from distinct mixtures");

    fs::create_directories(out_dir);

    DatasetManifest manifest;
    manifest.seed = options.seed;
    manifest.drop_fraction = options.drop_fraction;
    manifest.quartile = options.quartile;
    manifest.corpus_fingerprint = pool_fingerprint(pool);
    {
        double cutoff = std::numeric_limits<double>::infinity();
        for (const auto& est : pool) cutoff = std::min(cutoff, est.confidence);
        manifest.cutoff_confidence = cutoff;
    }

    for (std::size_t i = 0; i < options.count; ++i) {
        Rng item_rng(derive_seed(options.seed, i));
        bool emitted = false;
        for (int attempt = 0; attempt < 20 && !emitted; ++attempt) {
            const std::size_t v_idx = static_cast<std::size_t>(item_rng.next_below(pool.size()));
            std::vector<std::size_t> candidates;
            for (std::size_t j = 0; j < pool.size(); ++j)
                if (pool[j].origin_mixture != pool[v_idx].origin_mixture) candidates.push_back(j);
            const std::size_t a_idx =
                candidates[static_cast<std::size_t>(item_rng.next_below(candidates.size()))];
            const double target = item_rng.next_real(options.snr_min_db, options.snr_max_db);
            const std::uint64_t remix_seed = item_rng.next_u64();

            auto clips = remix(pool[v_idx], pool[a_idx], options.snippet_seconds, target, remix_seed);
            if (!clips) continue;

            char name[32];
            std::snprintf(name, sizeof(name), "%05zu", i);
            RemixEntry entry;
            entry.vocal_id = pool[v_idx].id;
            entry.accomp_id = pool[a_idx].id;
            entry.vocal_offset_seconds = clips->vocal_offset_seconds;
            entry.accomp_offset_seconds = clips->accomp_offset_seconds;
            entry.target_snr_db = target;
            entry.vocal_gain = clips->vocal_gain;
            entry.seed = remix_seed;
            entry.mixture_path = std::string(name) + "_mixture.wav";
            entry.vocal_ref_path = std::string(name) + "_vocals.wav";
            entry.accomp_ref_path = std::string(name) + "_accompaniment.wav";
            save_audio(clips->mixture, (fs::path(out_dir) / entry.mixture_path).string(),
                       BitDepth::Float32);
            save_audio(clips->vocal_ref, (fs::path(out_dir) / entry.vocal_ref_path).string(),
                       BitDepth::Float32);
            save_audio(clips->accomp_ref, (fs::path(out_dir) / entry.accomp_ref_path).string(),
                       BitDepth::Float32);
            manifest.entries.push_back(std::move(entry));
            emitted = true;
        }
        if (!emitted)
            throw std::runtime_error("build_dataset: could not draw a usable pair for entry " +
                                     std::to_string(i));
    }

    std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    if (!f) throw std::runtime_error("build_dataset: cannot write manifest under " + out_dir);
    f << manifest_to_json(manifest) << "\n";
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    json entries = json::array();
    for (const auto& e : manifest.entries) {
        entries.push_back(json{{"vocal_id", e.vocal_id},
                               {"accomp_id", e.accomp_id},
                               {"vocal_offset_s", e.vocal_offset_seconds},
                               {"accomp_offset_s", e.accomp_offset_seconds},
                               {"target_snr_db", e.target_snr_db},
                               {"vocal_gain", e.vocal_gain},
                               {"seed", e.seed},
                               {"mixture_path", e.mixture_path},
                               {"vocal_ref_path", e.vocal_ref_path},
                               {"accomp_ref_path", e.accomp_ref_path}});
    }
    const json doc = {{"version", manifest.version},
                      {"seed", manifest.seed},
                      {"drop_fraction", manifest.drop_fraction},
                      {"quartile", manifest.quartile},
                      {"cutoff_confidence", manifest.cutoff_confidence},
                      {"corpus_fingerprint", manifest.corpus_fingerprint},
                      {"entries", entries}};
    return doc.dump(2);
}

DatasetManifest read_dataset_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_dataset_manifest: cannot open " + path);
    json doc = json::parse(f);
    DatasetManifest manifest;
    manifest.version = doc.at("version").get<std::string>();
    manifest.seed = doc.at("seed").get<std::uint64_t>();
    manifest.drop_fraction = doc.at("drop_fraction").get<double>();
    manifest.quartile = doc.value("quartile", "");
    manifest.cutoff_confidence = doc.at("cutoff_confidence").get<double>();
    manifest.corpus_fingerprint = doc.at("corpus_fingerprint").get<std::string>();
    for (const auto& j : doc.at("entries")) {
        RemixEntry e;
        e.vocal_id = j.at("vocal_id").get<std::string>();
        e.accomp_id = j.at("accomp_id").get<std::string>();
        e.vocal_offset_seconds = j.at("vocal_offset_s").get<double>();
        e.accomp_offset_seconds = j.at("accomp_offset_s").get<double>();
        e.target_snr_db = j.at("target_snr_db").get<double>();
        e.vocal_gain = j.at("vocal_gain").get<double>();
        e.seed = j.at("seed").get<std::uint64_t>();
        e.mixture_path = j.at("mixture_path").get<std::string>();
        e.vocal_ref_path = j.at("vocal_ref_path").get<std::string>();
        e.accomp_ref_path = j.at("accomp_ref_path").get<std::string>();
        manifest.entries.push_back(std::move(e));
    }
    return manifest;
}

} // namespace primsep
