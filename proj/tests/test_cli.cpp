#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "primsep/audio.hpp"
#include "primsep/tfr.hpp"
#include "synth.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace primsep;

namespace {

int run_cli(const std::string& args, const fs::path& workdir, std::string* out = nullptr,
            std::string* err = nullptr) {
    const fs::path out_path = workdir / "stdout.txt";
    const fs::path err_path = workdir / "stderr.txt";
    const std::string cmd = std::string(PRIMSEP_CLI_PATH) + " " + args + " > " +
                            out_path.string() + " 2> " + err_path.string();
    const int status = std::system(cmd.c_str());
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    };
    if (out != nullptr) *out = slurp(out_path);
    if (err != nullptr) *err = slurp(err_path);
    REQUIRE(WIFEXITED(status));
    return WEXITSTATUS(status);
}

std::string file_bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_scene(const fs::path& base, double seconds, std::uint64_t seed) {
    synth::SceneParams params;
    params.duration_seconds = seconds;
    params.seed = seed;
    const synth::Scene scene = synth::make_scene(params);
    save_audio(make_mono_clip(scene.mixture), base.string() + "_mixture.wav", BitDepth::Float32);
    save_audio(make_mono_clip(scene.vocals), base.string() + "_vocals.wav", BitDepth::Float32);
    save_audio(make_mono_clip(scene.accompaniment), base.string() + "_accompaniment.wav",
               BitDepth::Float32);
}

} // namespace

TEST_CASE("separate writes stems, confidence, and reconstructs the input") {
    const auto dir = testutil::temp_dir("cli_separate");
    write_scene(dir / "song", 4.0, 201);
    const int rc = run_cli("separate " + (dir / "song_mixture.wav").string() + " -o " +
                               (dir / "out").string(),
                           dir);
    CHECK(rc == 0);
    CHECK(fs::exists(dir / "out" / "vocals.wav"));
    CHECK(fs::exists(dir / "out" / "accompaniment.wav"));
    CHECK(fs::exists(dir / "out" / "confidence.json"));

    const AudioClip mix = load_audio((dir / "song_mixture.wav").string());
    const AudioClip vocals = load_audio((dir / "out" / "vocals.wav").string());
    const AudioClip accomp = load_audio((dir / "out" / "accompaniment.wav").string());
    REQUIRE(vocals.num_samples() == mix.num_samples());
    double worst = 0.0;
    for (std::size_t i = 0; i < mix.num_samples(); ++i)
        worst = std::max(worst, std::abs(vocals.samples[0][i] + accomp.samples[0][i] -
                                         mix.samples[0][i]));
    CHECK(worst < 1e-6);

    std::ifstream cf(dir / "out" / "confidence.json");
    const json report = json::parse(cf);
    CHECK(report.contains("silhouette"));
    CHECK(report.contains("posterior_strength"));
    CHECK(report.contains("confidence"));
    CHECK(report.contains("n"));
    CHECK(report.contains("seed"));
}

TEST_CASE("separate --beta 500 yields near-binary masks") {
    const auto dir = testutil::temp_dir("cli_beta");
    write_scene(dir / "song", 4.0, 202);
    const int rc = run_cli("separate " + (dir / "song_mixture.wav").string() + " -o " +
                               (dir / "out").string() + " --beta 500 --dump-masks",
                           dir);
    CHECK(rc == 0);
    const SoftMask mask = read_msk1((dir / "out" / "vocals.msk1").string());
    std::size_t binary = 0;
    for (double v : mask.values)
        if (v < 1e-3 || v > 1.0 - 1e-3) ++binary;
    CHECK(static_cast<double>(binary) > 0.95 * static_cast<double>(mask.values.size()));

    // Per-primitive rasters are dumped alongside the ensemble mask.
    for (const char* name : {"hpss", "repetition", "micromodulation", "melodic"})
        CHECK(fs::exists(dir / "out" / (std::string(name) + ".msk1")));
}

TEST_CASE("errors surface as machine-readable JSON with exit 1") {
    const auto dir = testutil::temp_dir("cli_error");
    std::string err;
    const int rc =
        run_cli("separate " + (dir / "missing.wav").string() + " -o " + (dir / "out").string(),
                dir, nullptr, &err);
    CHECK(rc == 1);
    const json parsed = json::parse(err);
    CHECK(parsed.at("code") == 1);
    CHECK(parsed.at("error").get<std::string>().find("missing.wav") != std::string::npos);
}

TEST_CASE("confidence prints the report JSON and respects --print-config") {
    const auto dir = testutil::temp_dir("cli_confidence");
    write_scene(dir / "song", 4.0, 203);
    std::string out;
    int rc = run_cli("confidence " + (dir / "song_mixture.wav").string() + " --seed 11", dir, &out);
    CHECK(rc == 0);
    const json report = json::parse(out);
    CHECK(report.at("seed") == 11);
    CHECK(report.at("confidence").get<double>() > 0.0);

    rc = run_cli("confidence " + (dir / "song_mixture.wav").string() +
                     " --beta 7.5 --print-config",
                 dir, &out);
    CHECK(rc == 0);
    const json config = json::parse(out);
    CHECK(config.at("command") == "confidence");
    CHECK(config.at("beta") == 7.5);
    CHECK(config.at("primitives").at("hpss_time_kernel") == 17);
}

TEST_CASE("bootstrap-dataset is byte-reproducible and flags corpus failures") {
    const auto dir = testutil::temp_dir("cli_bootstrap");
    fs::create_directories(dir / "corpus");
    write_scene(dir / "corpus" / "a", 9.0, 204);
    write_scene(dir / "corpus" / "b", 9.0, 205);
    for (const char* stem : {"a", "b"}) {
        fs::remove(dir / "corpus" / (std::string(stem) + "_vocals.wav"));
        fs::remove(dir / "corpus" / (std::string(stem) + "_accompaniment.wav"));
    }

    const std::string flags =
        " --count 6 --seed 42 --segment-length 4 --segment-overlap 2 --snippet-seconds 3";
    std::string out;
    int rc = run_cli("bootstrap-dataset " + (dir / "corpus").string() + " -o " +
                         (dir / "run1").string() + flags + " --jobs 1",
                     dir, &out);
    CHECK(rc == 0);
    CHECK(out.find("pool size") != std::string::npos);
    rc = run_cli("bootstrap-dataset " + (dir / "corpus").string() + " -o " +
                     (dir / "run2").string() + flags + " --jobs 2",
                 dir, &out);
    CHECK(rc == 0);
    CHECK(file_bytes(dir / "run1" / "remixes" / "manifest.json") ==
          file_bytes(dir / "run2" / "remixes" / "manifest.json"));

    const json manifest =
        json::parse(file_bytes(dir / "run1" / "remixes" / "manifest.json"));
    CHECK(manifest.at("entries").size() == 6);
    for (const auto& entry : manifest.at("entries")) {
        const double snr = entry.at("target_snr_db").get<double>();
        CHECK(snr >= -2.5);
        CHECK(snr <= 2.5);
    }

    // A corrupt corpus file is skipped and reported via exit code 2.
    testutil::write_raw(dir / "corpus" / "broken.wav", "not audio");
    std::string err;
    rc = run_cli("bootstrap-dataset " + (dir / "corpus").string() + " -o " +
                     (dir / "run3").string() + flags,
                 dir, &out, &err);
    CHECK(rc == 2);
    CHECK(err.find("broken.wav") != std::string::npos);
}

TEST_CASE("bootstrap-dataset --quartile Q1 restricts the pool") {
    const auto dir = testutil::temp_dir("cli_quartile");
    fs::create_directories(dir / "corpus");
    write_scene(dir / "corpus" / "a", 9.0, 206);
    write_scene(dir / "corpus" / "b", 9.0, 207);
    for (const char* stem : {"a", "b"}) {
        fs::remove(dir / "corpus" / (std::string(stem) + "_vocals.wav"));
        fs::remove(dir / "corpus" / (std::string(stem) + "_accompaniment.wav"));
    }
    std::string out;
    const int rc = run_cli(
        "bootstrap-dataset " + (dir / "corpus").string() + " -o " + (dir / "run").string() +
            " --count 3 --seed 1 --segment-length 4 --segment-overlap 2 --snippet-seconds 3"
            " --quartile Q1",
        dir, &out);
    // 6 segments -> Q1 holds one estimate; a single origin cannot pair.
    CHECK(rc == 1);

    std::string err;
    const int rc_bad = run_cli("bootstrap-dataset " + (dir / "corpus").string() + " -o " +
                                   (dir / "runbad").string() + " --count 3 --quartile Q9",
                               dir, nullptr, &err);
    CHECK(rc_bad == 1);
    CHECK(err.find("quartile") != std::string::npos);
}

TEST_CASE("evaluate scores pairs, marks infinities, and survives missing estimates") {
    const auto dir = testutil::temp_dir("cli_evaluate");
    fs::create_directories(dir / "refs");
    fs::create_directories(dir / "ests");
    write_scene(dir / "refs" / "t1", 4.0, 208);
    fs::remove(dir / "refs" / "t1_mixture.wav");
    // Estimates identical to references: SDR is +inf and excluded from regression.
    fs::copy_file(dir / "refs" / "t1_vocals.wav", dir / "ests" / "t1_vocals.wav");
    fs::copy_file(dir / "refs" / "t1_accompaniment.wav", dir / "ests" / "t1_accompaniment.wav");

    std::string out;
    int rc = run_cli("evaluate --refs " + (dir / "refs").string() + " --ests " +
                         (dir / "ests").string() + " -o " + (dir / "out").string(),
                     dir, &out);
    CHECK(rc == 0);
    const std::string csv = file_bytes(dir / "out" / "metrics.csv");
    CHECK(csv.find("t1,vocals,inf") != std::string::npos);
    CHECK(csv.find("t1,accompaniment,inf") != std::string::npos);

    // Second reference without estimates: reported, others still evaluated.
    write_scene(dir / "refs" / "t2", 4.0, 209);
    fs::remove(dir / "refs" / "t2_mixture.wav");
    std::string err;
    rc = run_cli("evaluate --refs " + (dir / "refs").string() + " --ests " +
                     (dir / "ests").string() + " -o " + (dir / "out2").string(),
                 dir, &out, &err);
    CHECK(rc == 2);
    CHECK(err.find("t2_vocals.wav") != std::string::npos);
    const json doc = json::parse(file_bytes(dir / "out2" / "metrics.json"));
    CHECK(doc.at("pairs").size() == 2);
    CHECK(doc.at("errors").size() == 1);
}
