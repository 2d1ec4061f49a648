// primsep command-line front end: separate | confidence | bootstrap-dataset |
// evaluate. Every command is reproducible from (inputs, flags, seed); --print-config
// emits the fully resolved configuration without running.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "primsep/bootstrap.hpp"
#include "primsep/confidence.hpp"
#include "primsep/ensemble.hpp"
#include "primsep/eval.hpp"
#include "primsep/primitives.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace primsep;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitPartialFailure = 2;
constexpr int kExitInternalError = 3;

json metric_json(double v) {
    if (std::isinf(v)) return v > 0.0 ? json("inf") : json("-inf");
    return json(v);
}

std::string metric_csv(double v) {
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

json report_json(const ConfidenceReport& r) {
    return json{{"silhouette", r.silhouette_mean},
                {"posterior_strength", r.posterior_strength_mean},
                {"confidence", r.confidence},
                {"n", r.n_sampled},
                {"seed", r.seed},
                {"degenerate", r.degenerate}};
}

json primitive_config_json(const PrimitiveConfig& cfg) {
    return json{{"hpss_time_kernel", cfg.hpss_time_kernel},
                {"hpss_freq_kernel", cfg.hpss_freq_kernel},
                {"hpss_mask_power", cfg.hpss_mask_power},
                {"twodft_patch_t", cfg.twodft_patch_t},
                {"twodft_patch_f", cfg.twodft_patch_f},
                {"twodft_peak_nbhd_rate", cfg.twodft_peak_nbhd_rate},
                {"twodft_peak_nbhd_scale", cfg.twodft_peak_nbhd_scale},
                {"twodft_peak_threshold_factor", cfg.twodft_peak_threshold_factor},
                {"twodft_zero_rate_halfwidth", cfg.twodft_zero_rate_halfwidth},
                {"melodic_f0_min_hz", cfg.melodic_f0_min_hz},
                {"melodic_f0_max_hz", cfg.melodic_f0_max_hz},
                {"melodic_harmonics", cfg.melodic_harmonics},
                {"melodic_tolerance_cents", cfg.melodic_tolerance_cents},
                {"melodic_grid_cents", cfg.melodic_grid_cents},
                {"melodic_smooth_lambda", cfg.melodic_smooth_lambda},
                {"melodic_voicing_tau", cfg.melodic_voicing_tau}};
}

struct CommonOpts {
    std::string primitive_config_path;
    double beta = kDefaultBeta;
    std::size_t silhouette_n = kDefaultSilhouetteSamples;
    std::uint64_t seed = 0;
    bool print_config = false;

    PrimitiveConfig primitive_config() const {
        if (primitive_config_path.empty()) return PrimitiveConfig{};
        return load_primitive_config(primitive_config_path);
    }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--primitive-config", opts.primitive_config_path,
                    "Key=value file overriding primitive defaults");
    cmd->add_option("--beta", opts.beta, "Clustering hardness (default 5.0)");
    cmd->add_option("--confidence-n", opts.silhouette_n,
                    "Silhouette sample size (default 1000)");
    cmd->add_option("--seed", opts.seed, "Master seed for all sampling");
    cmd->add_flag("--print-config", opts.print_config,
                  "Print the resolved configuration and exit");
}

BitDepth parse_depth(const std::string& s) {
    if (s == "16") return BitDepth::Pcm16;
    if (s == "24") return BitDepth::Pcm24;
    if (s == "float32") return BitDepth::Float32;
    throw std::invalid_argument("bad --bit-depth '" + s + "' (use 16, 24, or float32)");
}

int run_separate(const std::string& input, const std::string& out_dir, const CommonOpts& common,
                 bool dump_masks, const std::string& depth_name) {
    const PrimitiveConfig cfg = common.primitive_config();
    const BitDepth depth = parse_depth(depth_name);
    if (common.print_config) {
        json doc = {{"command", "separate"},   {"input", input},
                    {"out_dir", out_dir},      {"beta", common.beta},
                    {"confidence_n", common.silhouette_n}, {"seed", common.seed},
                    {"bit_depth", depth_name}, {"dump_masks", dump_masks},
                    {"primitives", primitive_config_json(cfg)}};
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }

    const AudioClip mono = downmix(load_audio(input));
    const SeparationResult result = separate(mono, cfg, common.beta);
    const ConfidenceReport report = confidence_report(
        result.embedding, result.assignment, result.mixture_magnitude, common.silhouette_n,
        common.seed);

    fs::create_directories(out_dir);
    const std::size_t clipped =
        save_audio(result.vocals, (fs::path(out_dir) / "vocals.wav").string(), depth) +
        save_audio(result.accompaniment, (fs::path(out_dir) / "accompaniment.wav").string(), depth);
    if (clipped > 0)
        std::cerr << "warning: clipped " << clipped << " samples at the requested bit depth\n";

    std::ofstream conf_file(fs::path(out_dir) / "confidence.json");
    conf_file << report_json(report).dump(2) << "\n";

    if (dump_masks) {
        const auto& names = primitive_names();
        for (std::size_t d = 0; d < result.primitive_masks.size(); ++d)
            write_msk1(result.primitive_masks[d],
                       (fs::path(out_dir) / (names[d] + ".msk1")).string());
        write_msk1(result.vocals_mask, (fs::path(out_dir) / "vocals.msk1").string());
    }

    std::cout << "separated " << input << " -> " << out_dir << " (confidence "
              << report.confidence << ")\n";
    return kExitOk;
}

int run_confidence(const std::string& input, const CommonOpts& common) {
    const PrimitiveConfig cfg = common.primitive_config();
    if (common.print_config) {
        json doc = {{"command", "confidence"},
                    {"input", input},
                    {"beta", common.beta},
                    {"confidence_n", common.silhouette_n},
                    {"seed", common.seed},
                    {"primitives", primitive_config_json(cfg)}};
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }
    const AudioClip mono = downmix(load_audio(input));
    const SeparationResult result = separate(mono, cfg, common.beta);
    const ConfidenceReport report = confidence_report(
        result.embedding, result.assignment, result.mixture_magnitude, common.silhouette_n,
        common.seed);
    std::cout << report_json(report).dump(2) << "\n";
    return kExitOk;
}

int run_bootstrap(const std::string& corpus_dir, const std::string& out_dir,
                  const CommonOpts& common, std::size_t count, double drop_fraction,
                  const std::string& quartile, double snr_min, double snr_max,
                  double snippet_seconds, const SegmenterParams& segmenter, std::size_t jobs) {
    const PrimitiveConfig cfg = common.primitive_config();
    if (!quartile.empty() && (quartile.size() != 2 || quartile[0] != 'Q' || quartile[1] < '1' ||
                              quartile[1] > '4'))
        throw std::invalid_argument("bad --quartile '" + quartile + "' (use Q1..Q4)");
    if (common.print_config) {
        json doc = {{"command", "bootstrap-dataset"},
                    {"corpus_dir", corpus_dir},
                    {"out_dir", out_dir},
                    {"count", count},
                    {"seed", common.seed},
                    {"beta", common.beta},
                    {"confidence_n", common.silhouette_n},
                    {"drop_fraction", drop_fraction},
                    {"quartile", quartile},
                    {"snr_min_db", snr_min},
                    {"snr_max_db", snr_max},
                    {"snippet_seconds", snippet_seconds},
                    {"segment_length_s", segmenter.length_seconds},
                    {"segment_overlap_s", segmenter.overlap_seconds},
                    {"quiet_threshold_db", segmenter.quiet_threshold_db},
                    {"jobs", jobs},
                    {"primitives", primitive_config_json(cfg)}};
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }

    std::vector<std::string> paths;
    if (!fs::is_directory(corpus_dir))
        throw std::invalid_argument("corpus dir not found: " + corpus_dir);
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".wav")
            paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::invalid_argument("corpus dir has no .wav files: " + corpus_dir);

    CorpusOptions corpus_options;
    corpus_options.primitive_config = cfg;
    corpus_options.beta = common.beta;
    corpus_options.silhouette_n = common.silhouette_n;
    corpus_options.seed = common.seed;
    corpus_options.segmenter = segmenter;
    corpus_options.jobs = jobs;
    const CorpusResult corpus =
        separate_corpus(paths, (fs::path(out_dir) / "estimates").string(), corpus_options);
    for (const auto& failure : corpus.failures) std::cerr << "skipped: " << failure << "\n";
    if (corpus.estimates.empty()) throw std::runtime_error("no usable segments in corpus");

    const auto sorted_pool = filter_by_confidence(corpus.estimates, 0.0);
    const std::vector<SourceEstimate> filtered =
        quartile.empty() ? filter_by_confidence(corpus.estimates, drop_fraction)
                         : select_quartile(corpus.estimates, quartile[1] - '0');

    DatasetOptions dataset_options;
    dataset_options.count = count;
    dataset_options.snr_min_db = snr_min;
    dataset_options.snr_max_db = snr_max;
    dataset_options.snippet_seconds = snippet_seconds;
    dataset_options.seed = common.seed;
    dataset_options.drop_fraction = quartile.empty() ? drop_fraction : 0.0;
    dataset_options.quartile = quartile;
    const DatasetManifest manifest =
        build_dataset(filtered, (fs::path(out_dir) / "remixes").string(), dataset_options);

    const std::size_t n = sorted_pool.size();
    std::cout << "pool size:            " << n << "\n"
              << "dropped:              " << n - filtered.size() << "\n"
              << "confidence quartiles: " << sorted_pool[n / 4].confidence << " "
              << sorted_pool[n / 2].confidence << " " << sorted_pool[(3 * n) / 4].confidence
              << "\n"
              << "remixes written:      " << manifest.entries.size() << " under " << out_dir
              << "/remixes\n";
    return corpus.failures.empty() ? kExitOk : kExitPartialFailure;
}

int run_evaluate(const std::string& ref_dir, const std::string& est_dir,
                 const std::string& out_dir, bool print_config) {
    if (print_config) {
        json doc = {{"command", "evaluate"},
                    {"ref_dir", ref_dir},
                    {"est_dir", est_dir},
                    {"out_dir", out_dir}};
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }
    if (!fs::is_directory(ref_dir)) throw std::invalid_argument("refs dir not found: " + ref_dir);
    if (!fs::is_directory(est_dir)) throw std::invalid_argument("ests dir not found: " + est_dir);

    std::vector<std::string> ids;
    const std::string vocals_suffix = "_vocals.wav";
    for (const auto& entry : fs::directory_iterator(ref_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > vocals_suffix.size() &&
            name.compare(name.size() - vocals_suffix.size(), vocals_suffix.size(),
                         vocals_suffix) == 0)
            ids.push_back(name.substr(0, name.size() - vocals_suffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    if (ids.empty())
        throw std::invalid_argument("no *_vocals.wav references found in " + ref_dir);

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "metrics.csv");
    csv << "track_id,source,sd_sdr_db,si_sdr_db,confidence\n";

    json pairs = json::array();
    std::vector<std::string> errors;
    std::vector<double> conf_points, vocals_sdr_points, accomp_sdr_points;
    std::size_t excluded_infinite = 0;

    for (const auto& id : ids) {
        const auto require = [](const fs::path& p) {
            if (!fs::exists(p)) throw std::runtime_error("missing file: " + p.string());
            return p.string();
        };
        try {
            const AudioClip ref_vocals = load_audio(require(fs::path(ref_dir) / (id + "_vocals.wav")));
            const AudioClip ref_accomp =
                load_audio(require(fs::path(ref_dir) / (id + "_accompaniment.wav")));
            const AudioClip est_vocals = load_audio(require(fs::path(est_dir) / (id + "_vocals.wav")));
            const AudioClip est_accomp =
                load_audio(require(fs::path(est_dir) / (id + "_accompaniment.wav")));

            double confidence = std::nan("");
            const fs::path conf_path = fs::path(est_dir) / (id + "_confidence.json");
            if (fs::exists(conf_path)) {
                std::ifstream cf(conf_path);
                confidence = json::parse(cf).at("confidence").get<double>();
            }

            struct Row {
                const char* source;
                const AudioClip* ref;
                const AudioClip* est;
            };
            const Row rows[2] = {{"vocals", &ref_vocals, &est_vocals},
                                 {"accompaniment", &ref_accomp, &est_accomp}};
            for (const Row& row : rows) {
                const double sd = sd_sdr(row.ref->samples[0], row.est->samples[0]);
                const double si = si_sdr(row.ref->samples[0], row.est->samples[0]);
                csv << id << "," << row.source << "," << metric_csv(sd) << "," << metric_csv(si)
                    << "," << (std::isnan(confidence) ? "" : metric_csv(confidence)) << "\n";
                pairs.push_back(json{{"track_id", id},
                                     {"source", row.source},
                                     {"sd_sdr_db", metric_json(sd)},
                                     {"si_sdr_db", metric_json(si)},
                                     {"confidence",
                                      std::isnan(confidence) ? json(nullptr) : json(confidence)}});
                const bool is_vocals = row.source == std::string("vocals");
                if (!std::isnan(confidence)) {
                    if (std::isfinite(sd)) {
                        if (is_vocals) {
                            conf_points.push_back(confidence);
                            vocals_sdr_points.push_back(sd);
                        } else {
                            accomp_sdr_points.push_back(sd);
                        }
                    } else {
                        ++excluded_infinite;
                    }
                }
            }
        } catch (const std::exception& e) {
            errors.push_back(e.what());
            std::cerr << "error: " << e.what() << "\n";
        }
    }

    json doc = {{"pairs", pairs},
                {"errors", errors},
                {"excluded_infinite", excluded_infinite},
                {"regression", json(nullptr)}};
    // Confidence-vs-SD-SDR regressions per source (needs >= 3 finite points).
    if (conf_points.size() >= 3) {
        json regressions;
        auto regress = [&](const std::vector<double>& y, const char* name) {
            if (y.size() != conf_points.size()) return;
            try {
                const RegressionResult r = correlation_report(conf_points, y);
                regressions[name] = json{{"slope", r.slope},
                                         {"intercept", r.intercept},
                                         {"r_value", r.r_value},
                                         {"p_value", r.p_value},
                                         {"n", r.n}};
            } catch (const std::exception& e) {
                regressions[name] = json{{"error", e.what()}};
            }
        };
        regress(vocals_sdr_points, "vocals");
        regress(accomp_sdr_points, "accompaniment");
        doc["regression"] = regressions;
    }
    std::ofstream jf(fs::path(out_dir) / "metrics.json");
    jf << doc.dump(2) << "\n";

    std::cout << "evaluated " << pairs.size() << " source pairs (" << errors.size()
              << " errors) -> " << out_dir << "\n";
    return errors.empty() ? kExitOk : kExitPartialFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Primitive-ensemble vocal/accompaniment separation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "INI file with long-option keys");

    auto* sep = app.add_subcommand("separate", "Separate one mixture into vocals/accompaniment");
    std::string sep_input, sep_out;
    bool sep_dump_masks = false;
    std::string sep_depth = "float32";
    CommonOpts sep_common;
    sep->add_option("input", sep_input, "Input WAV (44100 Hz)")->required();
    sep->add_option("-o,--out", sep_out, "Output directory")->required();
    sep->add_flag("--dump-masks", sep_dump_masks, "Also write MSK1 mask rasters");
    sep->add_option("--bit-depth", sep_depth, "Output depth: 16, 24, or float32");
    add_common(sep, sep_common);

    auto* conf = app.add_subcommand("confidence", "Estimate separation confidence (no audio output)");
    std::string conf_input;
    CommonOpts conf_common;
    conf->add_option("input", conf_input, "Input WAV (44100 Hz)")->required();
    add_common(conf, conf_common);

    auto* boot = app.add_subcommand("bootstrap-dataset",
                                    "Separate a corpus, confidence-filter, remix a training set");
    std::string boot_corpus, boot_out, boot_quartile;
    std::size_t boot_count = 0;
    double boot_drop = 0.25, boot_snr_min = -2.5, boot_snr_max = 2.5, boot_snippet = 15.0;
    SegmenterParams boot_segmenter;
    std::size_t boot_jobs = std::max(1u, std::thread::hardware_concurrency());
    CommonOpts boot_common;
    boot->add_option("corpus", boot_corpus, "Directory of mixture WAVs")->required();
    boot->add_option("-o,--out", boot_out, "Output directory")->required();
    boot->add_option("--count", boot_count, "Number of remixes to generate")->required();
    boot->add_option("--drop-fraction", boot_drop,
                     "Lowest-confidence fraction to drop (default 0.25)");
    boot->add_option("--quartile", boot_quartile, "Use only confidence quartile Q1..Q4");
    boot->add_option("--snr-min", boot_snr_min, "Remix SNR lower bound, dB");
    boot->add_option("--snr-max", boot_snr_max, "Remix SNR upper bound, dB");
    boot->add_option("--snippet-seconds", boot_snippet, "Remix snippet length, seconds");
    boot->add_option("--segment-length", boot_segmenter.length_seconds, "Segment length, seconds");
    boot->add_option("--segment-overlap", boot_segmenter.overlap_seconds, "Segment overlap, seconds");
    boot->add_option("--quiet-threshold-db", boot_segmenter.quiet_threshold_db,
                     "Drop segments with RMS below this dBFS");
    boot->add_option("--jobs", boot_jobs, "Parallel corpus workers")->envname("PRIMSEP_JOBS");
    add_common(boot, boot_common);

    auto* eval = app.add_subcommand("evaluate", "Score estimates against references");
    std::string eval_refs, eval_ests, eval_out;
    bool eval_print_config = false;
    eval->add_option("--refs", eval_refs, "Directory of <id>_vocals/_accompaniment.wav references")
        ->required();
    eval->add_option("--ests", eval_ests, "Directory of matching estimates")->required();
    eval->add_option("-o,--out", eval_out, "Output directory")->required();
    eval->add_flag("--print-config", eval_print_config,
                   "Print the resolved configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUserError;
    }

    try {
        if (app.got_subcommand(sep))
            return run_separate(sep_input, sep_out, sep_common, sep_dump_masks, sep_depth);
        if (app.got_subcommand(conf)) return run_confidence(conf_input, conf_common);
        if (app.got_subcommand(boot))
            return run_bootstrap(boot_corpus, boot_out, boot_common, boot_count, boot_drop,
                                 boot_quartile, boot_snr_min, boot_snr_max, boot_snippet,
                                 boot_segmenter, boot_jobs);
        if (app.got_subcommand(eval))
            return run_evaluate(eval_refs, eval_ests, eval_out, eval_print_config);
        return kExitUserError;
    } catch (const std::invalid_argument& e) {
        std::cerr << json{{"error", e.what()}, {"code", kExitUserError}}.dump() << "\n";
        return kExitUserError;
    } catch (const std::runtime_error& e) {
        std::cerr << json{{"error", e.what()}, {"code", kExitUserError}}.dump() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"code", kExitInternalError}}.dump() << "\n";
        return kExitInternalError;
    } catch (...) {
        std::cerr << json{{"error", "unknown failure"}, {"code", kExitInternalError}}.dump()
                  << "\n";
        return kExitInternalError;
    }
}
