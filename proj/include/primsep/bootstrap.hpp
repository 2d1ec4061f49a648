#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "primsep/audio.hpp"
#include "primsep/confidence.hpp"
#include "primsep/primitives.hpp"

namespace primsep {

// One separated (vocals, accompaniment) pair persisted on disk, carrying the
// mixture-level confidence report of the separation that produced it.
struct SourceEstimate {
    std::string id;             // "<mixture stem>_t<offset ms>"
    std::string origin_mixture; // source file stem
    double offset_seconds = 0.0;
    std::string vocals_path;
    std::string accompaniment_path;
    ConfidenceReport report;
    double confidence = 0.0; // == report.confidence
};

struct RemixEntry {
    std::string vocal_id;
    std::string accomp_id;
    double vocal_offset_seconds = 0.0;
    double accomp_offset_seconds = 0.0;
    double target_snr_db = 0.0;
    double vocal_gain = 0.0;
    std::uint64_t seed = 0;
    std::string mixture_path;
    std::string vocal_ref_path;
    std::string accomp_ref_path;
};

struct DatasetManifest {
    std::string version = "1";
    std::uint64_t seed = 0;
    double drop_fraction = 0.0;
    std::string quartile;            // "Q1".."Q4" when quartile mode was used, else ""
    double cutoff_confidence = 0.0;  // lowest confidence retained in the pool
    std::string corpus_fingerprint;  // hash of the filtered pool
    std::vector<RemixEntry> entries;
};

struct SegmenterParams {
    double length_seconds = 30.0;
    double overlap_seconds = 15.0;
    double quiet_threshold_db = -40.0; // RMS dBFS below which a segment is dropped
};

// Fixed-length segmentation with overlap; trailing partial segments are
// dropped, as are segments whose RMS falls below the quiet threshold.
std::vector<std::pair<double, AudioClip>> segment_clip(const AudioClip& clip,
                                                       const SegmenterParams& params);

struct CorpusOptions {
    PrimitiveConfig primitive_config;
    double beta = kDefaultBeta;
    std::size_t silhouette_n = kDefaultSilhouetteSamples;
    std::uint64_t seed = 0;
    SegmenterParams segmenter;
    std::size_t jobs = 1;
};

struct CorpusResult {
    std::vector<SourceEstimate> estimates;
    std::vector<std::string> failures; // per-file error descriptions
};

// Separates every retained segment of every corpus file, persisting stems as
// float32 WAV under out_dir and writing out_dir/pool.json. Per-file failures
// are collected, not fatal. Deterministic in (seed, corpus order) and
// independent of the parallelism degree.
CorpusResult separate_corpus(const std::vector<std::string>& paths, const std::string& out_dir,
                             const CorpusOptions& options);

void write_pool_manifest(const std::vector<SourceEstimate>& pool, const std::string& path);
std::vector<SourceEstimate> read_pool_manifest(const std::string& path);

// Drops the floor(drop_fraction * n) lowest-confidence estimates; the result
// is sorted by ascending confidence (ties by id).
std::vector<SourceEstimate> filter_by_confidence(const std::vector<SourceEstimate>& pool,
                                                 double drop_fraction);

// Quartile i of the confidence-sorted pool (1 = lowest confidence).
std::vector<SourceEstimate> select_quartile(const std::vector<SourceEstimate>& pool, int quartile);

struct RemixClips {
    AudioClip mixture;   // vocal_ref + accomp_ref, exact per sample
    AudioClip vocal_ref; // gain-adjusted vocal snippet
    AudioClip accomp_ref;
    double vocal_offset_seconds = 0.0;
    double accomp_offset_seconds = 0.0;
    double vocal_gain = 0.0;
};

// Draws snippet offsets, solves the vocal gain for the target SNR
// (vocals = signal, accompaniment = noise), and mixes. Returns nullopt if a
// silent snippet persists after 10 redraws. Reference samples are quantized
// to float32 so emitted WAVs match the in-memory clips.
std::optional<RemixClips> remix_clips(const AudioClip& vocal, const AudioClip& accomp,
                                      double snippet_seconds, double target_snr_db,
                                      std::uint64_t seed);

std::optional<RemixClips> remix(const SourceEstimate& vocal_source,
                                const SourceEstimate& accomp_source, double snippet_seconds,
                                double target_snr_db, std::uint64_t seed);

struct DatasetOptions {
    std::size_t count = 0;
    double snr_min_db = -2.5;
    double snr_max_db = 2.5;
    double snippet_seconds = 15.0;
    std::uint64_t seed = 0;
    // Provenance recorded in the manifest:
    double drop_fraction = 0.25;
    std::string quartile;
};

// Draws cross-origin (vocal, accompaniment) pairs, remixes at uniform random
// SNR in range, writes audio under out_dir and out_dir/manifest.json.
// Byte-identical manifest for identical (pool, options).
DatasetManifest build_dataset(const std::vector<SourceEstimate>& pool, const std::string& out_dir,
                              const DatasetOptions& options);

std::string manifest_to_json(const DatasetManifest& manifest);
DatasetManifest read_dataset_manifest(const std::string& path);

std::string pool_fingerprint(const std::vector<SourceEstimate>& pool);

} // namespace primsep
