#pragma once

#include "speechbio/ddk.hpp"
#include "speechbio/facial.hpp"
#include "speechbio/metrics.hpp"
#include "speechbio/session.hpp"
#include "speechbio/timing.hpp"
#include "speechbio/voice_quality.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace speechbio {

inline constexpr std::string_view kToolVersion = "1.0.0";

struct ExtractConfig {
    PitchConfig pitch;
    VadConfig vad;
    DdkConfig ddk;
    FacialConfig facial;
    OutlierThresholds outliers;
    /// Landmark frame rate used when neither the manifest nor a sidecar gives one.
    std::optional<double> fps;
    /// Worker threads; 0 picks the hardware concurrency.
    unsigned workers = 0;

    /// Rejects parameters outside their documented ranges.
    void validate() const;
};

nlohmann::json to_json(const ExtractConfig& config);

/// FNV-1a 64 of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// Acoustic metrics a task yields, in registry order.
std::vector<std::string> acoustic_metrics_for(const TaskKind& task);

struct ExtractResult {
    std::vector<UtteranceMetric> rows;
    std::vector<SubjectProfile> subjects;
    /// One object per failure: subject_id, utterance_id, task, stage, code, message.
    nlohmann::json errors = nlohmann::json::array();
    std::size_t utterances = 0;
    /// Utterances with at least one successfully extracted metric.
    std::size_t ok_utterances = 0;
};

/// Metrics of every utterance, ordered by manifest, then utterance, then registry order.
/// Failures become rows with an empty value and status "error:<code>".
ExtractResult extract_metrics(const std::vector<SessionManifest>& manifests, const ExtractConfig& config);

/// Loads the manifests, extracts, and writes metrics.csv, subjects.json and errors.json into
/// `out_dir`. A manifest that fails to load is logged in errors.json and skipped. Throws
/// InvalidArgument for an empty manifest list, before anything is written.
ExtractResult run_extract(const std::vector<std::filesystem::path>& manifests, const std::filesystem::path& out_dir,
                          const ExtractConfig& config);

struct AnalyzeConfig {
    std::uint64_t seed = 0;
    double alpha = 0.05;
    bool bootstrap_ci = false;
    int bootstrap_resamples = 2000;
    bool impute_mean = false;
    int folds = 5;
    bool use_rfe = true;
    /// Metric presence rule for the classification and regression designs.
    double min_presence = 0.8;

    void validate() const;
};

nlohmann::json to_json(const AnalyzeConfig& config);

/// Per-stage outcome of an analysis run.
struct AnalyzeSummary {
    std::string contrasts_status;
    std::vector<std::pair<std::string, std::string>> classification_status;  ///< pair, status
    std::vector<std::pair<std::string, std::string>> regression_status;      ///< cohort, status
};

/// Reads metrics.csv and subjects.json only, then writes effects.csv, effects_ranked.json,
/// cv_report.json, roc_points.csv and lars_path.json into `out_dir`. Stages degrade
/// independently and record their status.
AnalyzeSummary run_analyze(const std::filesystem::path& metrics_csv, const std::filesystem::path& subjects_json,
                           const std::filesystem::path& out_dir, const AnalyzeConfig& config);

/// Replaces doubles with their nine-significant-digit form and non-finite values with null.
nlohmann::json rounded(nlohmann::json j);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace speechbio
