#include "speechbio/error.hpp"
#include "speechbio/pipeline.hpp"
#include "speechbio/session.hpp"
#include "speechbio/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace speechbio;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kNoInput = 2, kInternal = 3 };

/// Manifest files as given; directories contribute every manifest.json below them, sorted.
std::vector<fs::path> expand_manifests(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (!fs::is_directory(in)) {
            out.emplace_back(in);
            continue;
        }
        std::vector<fs::path> found;
        for (const auto& e : fs::recursive_directory_iterator(in)) {
            if (e.is_regular_file() && e.path().filename() == "manifest.json") found.push_back(e.path());
        }
        std::sort(found.begin(), found.end());
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

int exit_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::InvalidArgument: return kUsage;
        case ErrorCode::MissingFile:
        case ErrorCode::ParseError:
        case ErrorCode::DuplicateTask:
        case ErrorCode::DuplicateSession:
        case ErrorCode::MissingAlsfrs:
        case ErrorCode::ItemOutOfRange:
        case ErrorCode::WrongItemCount:
        case ErrorCode::UnknownScenario: return kNoInput;
        default: return kInternal;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speech and facial biomarker extraction and cohort analysis"};
    app.set_config("--config", "", "TOML file with option values; subcommand options go in [extract], [analyze], ...");
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    // extract
    ExtractConfig ec;
    std::vector<std::string> manifest_inputs;
    std::string extract_out;
    std::string rate_basis = "articulation";
    double fps = 0.0;
    auto* extract = app.add_subcommand("extract", "Per-utterance acoustic and facial metrics into metrics.csv");
    extract->add_option("manifests", manifest_inputs, "Manifest files or directories searched for manifest.json")->required();
    extract->add_option("-o,--out", extract_out, "Output directory")->required();
    extract->add_option("--fps", fps, "Landmark frame rate when neither manifest nor sidecar gives one");
    extract->add_option("--f-min", ec.pitch.f_min, "Lowest F0 in Hz")->capture_default_str();
    extract->add_option("--f-max", ec.pitch.f_max, "Highest F0 in Hz")->capture_default_str();
    extract->add_option("--voicing-threshold", ec.pitch.voicing_threshold, "Minimum autocorrelation peak")->capture_default_str();
    extract->add_option("--vad-margin-db", ec.vad.margin_db, "Speech threshold above the noise floor")->capture_default_str();
    extract->add_option("--vad-floor-percentile", ec.vad.floor_percentile, "Noise floor percentile")->capture_default_str();
    extract->add_option("--min-pause", ec.vad.min_pause, "Shortest pause in s")->capture_default_str();
    extract->add_option("--min-speech", ec.vad.min_speech, "Shortest speech segment in s")->capture_default_str();
    extract->add_option("--ddk-min-gap", ec.ddk.min_gap, "Shortest gap between syllable onsets in s")->capture_default_str();
    extract->add_option("--ddk-rate-basis", rate_basis, "Syllable rate denominator")
        ->check(CLI::IsMember({"articulation", "speaking"}))
        ->capture_default_str();
    extract->add_option("--ear-threshold", ec.facial.ear_threshold, "Eye aspect ratio below which the eye counts closed")->capture_default_str();
    extract->add_option("--blink-min-frames", ec.facial.blink_min_frames, "Shortest blink in frames")->capture_default_str();
    extract->add_option("--max-ppt", ec.outliers.max_ppt, "Bamboo exclusion threshold for PPT")->capture_default_str();
    extract->add_option("--max-speaking-rate", ec.outliers.max_speaking_rate, "Bamboo exclusion threshold in words/min")->capture_default_str();
    extract->add_option("--max-articulation-rate", ec.outliers.max_articulation_rate, "Bamboo exclusion threshold in words/min")->capture_default_str();
    extract->add_option("-j,--workers", ec.workers, "Worker threads (0: all cores)")->capture_default_str();

    // analyze
    AnalyzeConfig ac;
    std::string metrics_csv, subjects_json, analyze_out;
    bool no_rfe = false;
    auto* analyze = app.add_subcommand("analyze", "Group contrasts, classification and severity regression");
    analyze->add_option("--metrics", metrics_csv, "metrics.csv from extract")->required();
    analyze->add_option("--subjects", subjects_json, "subjects.json from extract")->required();
    analyze->add_option("-o,--out", analyze_out, "Output directory")->required();
    analyze->add_option("--seed", ac.seed, "Seed for folds and bootstrap")->required();
    analyze->add_option("--alpha", ac.alpha, "Omnibus significance gate")->capture_default_str();
    analyze->add_flag("--bootstrap-ci", ac.bootstrap_ci, "Percentile bootstrap intervals for Glass' delta");
    analyze->add_option("--bootstrap-resamples", ac.bootstrap_resamples, "Bootstrap resamples")->capture_default_str();
    analyze->add_flag("--impute-mean", ac.impute_mean, "Impute missing classification features with training means");
    analyze->add_option("--folds", ac.folds, "Cross-validation folds")->capture_default_str();
    analyze->add_flag("--no-rfe", no_rfe, "Use all features instead of recursive elimination");
    analyze->add_option("--min-presence", ac.min_presence, "Fraction of subjects a metric must be observed in")->capture_default_str();

    // synth
    std::string scenario, synth_out;
    std::uint64_t synth_seed = 0;
    synth::Options so;
    auto* synth_cmd = app.add_subcommand("synth", "Write synthetic sessions with known ground truth");
    synth_cmd->add_option("scenario", scenario, "Scenario name")->required()->check(CLI::IsMember(synth::scenario_names()));
    synth_cmd->add_option("-o,--out", synth_out, "Output directory")->required();
    synth_cmd->add_option("--seed", synth_seed, "Random seed")->required();
    synth_cmd->add_option("--f0", so.f0, "vowel-jitter: F0 in Hz")->capture_default_str();
    synth_cmd->add_option("--jitter", so.jitter, "vowel-jitter: period perturbation fraction")->capture_default_str();
    synth_cmd->add_option("--shimmer", so.shimmer, "vowel-jitter: amplitude perturbation fraction")->capture_default_str();
    synth_cmd->add_option("--rate", so.rate, "ddk-train: syllables/s")->capture_default_str();
    synth_cmd->add_option("--ctv", so.ctv, "ddk-train: interval standard deviation in s")->capture_default_str();
    synth_cmd->add_option("--count", so.count, "ddk-train: syllables")->capture_default_str();
    synth_cmd->add_option("--blinks", so.blinks, "landmark-motion: blinks in 10 s")->capture_default_str();
    synth_cmd->add_option("--jaw-amplitude", so.jaw_amplitude, "landmark-motion: jaw amplitude in px")->capture_default_str();

    // validate-manifest
    std::vector<std::string> to_validate;
    auto* validate = app.add_subcommand("validate-manifest", "Check manifests without extracting");
    validate->add_option("manifests", to_validate, "Manifest files or directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*extract) {
            if (extract->count("--fps") > 0) ec.fps = fps;
            ec.ddk.rate_basis = rate_basis == "speaking" ? SyllableRateBasis::Speaking : SyllableRateBasis::Articulation;
            ec.validate();
            const auto manifests = expand_manifests(manifest_inputs);
            if (manifests.empty()) {
                std::cerr << "error: no manifests found\n";
                return kNoInput;
            }
            const auto result = run_extract(manifests, extract_out, ec);
            std::cerr << result.ok_utterances << '/' << result.utterances << " utterances extracted, " << result.errors.size()
                      << " errors logged\n";
            return result.ok_utterances == 0 ? kNoInput : kOk;
        }
        if (*analyze) {
            ac.use_rfe = !no_rfe;
            ac.validate();
            if (!fs::exists(metrics_csv) || !fs::exists(subjects_json)) {
                std::cerr << "error: metrics or subjects file not found\n";
                return kNoInput;
            }
            const auto s = run_analyze(metrics_csv, subjects_json, analyze_out, ac);
            std::cerr << "contrasts: " << s.contrasts_status << '\n';
            for (const auto& [pair, status] : s.classification_status) std::cerr << "classification " << pair << ": " << status << '\n';
            for (const auto& [cohort, status] : s.regression_status) std::cerr << "regression " << cohort << ": " << status << '\n';
            return kOk;
        }
        if (*synth_cmd) {
            synth::synthesize(scenario, synth_out, synth_seed, so);
            return kOk;
        }
        if (*validate) {
            const auto manifests = expand_manifests(to_validate);
            if (manifests.empty()) {
                std::cerr << "error: no manifests found\n";
                return kNoInput;
            }
            int bad = 0;
            std::vector<SessionManifest> loaded;
            for (const auto& m : manifests) {
                try {
                    loaded.push_back(load_manifest(m));
                    std::cout << m.generic_string() << ": ok\n";
                } catch (const Error& e) {
                    ++bad;
                    std::cout << m.generic_string() << ": " << e.what() << '\n';
                }
            }
            try {
                check_one_session_per_subject(loaded);
            } catch (const Error& e) {
                ++bad;
                std::cout << e.what() << '\n';
            }
            return bad == 0 ? kOk : kNoInput;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_for(e);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}
