#include "speechbio/pipeline.hpp"

#include "speechbio/audio.hpp"
#include "speechbio/classification.hpp"
#include "speechbio/cohort_stats.hpp"
#include "speechbio/design_matrix.hpp"
#include "speechbio/error.hpp"
#include "speechbio/landmarks.hpp"
#include "speechbio/lars.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <thread>

namespace speechbio {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

std::string error_code_name(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code()));
    return "Internal";
}

}  // namespace

void ExtractConfig::validate() const {
    require(pitch.f_min > 0.0 && pitch.f_min < pitch.f_max, "pitch range requires 0 < f_min < f_max");
    require(pitch.voicing_threshold > 0.0 && pitch.voicing_threshold < 1.0, "voicing threshold must be in (0, 1)");
    require(vad.frame > 0.0 && vad.hop > 0.0, "VAD frame and hop must be positive");
    require(vad.margin_db >= 0.0, "VAD margin must be >= 0 dB");
    require(vad.floor_percentile >= 0.0 && vad.floor_percentile <= 100.0, "VAD floor percentile must be in [0, 100]");
    require(vad.min_pause >= 0.0 && vad.min_speech >= 0.0, "VAD durations must be >= 0");
    require(ddk.min_gap > 0.0 && ddk.min_prominence_db > 0.0, "DDK gap and prominence must be positive");
    require(facial.ear_threshold > 0.0 && facial.blink_min_frames >= 1, "EAR threshold and blink length must be positive");
    require(facial.max_gap >= 0.0, "maximum landmark gap must be >= 0");
    require(!fps || *fps > 0.0, "fps must be positive");
    require(outliers.max_speaking_rate > 0.0 && outliers.max_articulation_rate > 0.0 && outliers.max_ppt > 0.0,
            "outlier thresholds must be positive");
}

json to_json(const ExtractConfig& c) {
    return {
        {"pitch",
         {{"f_min", c.pitch.f_min},
          {"f_max", c.pitch.f_max},
          {"voicing_threshold", c.pitch.voicing_threshold},
          {"window", c.pitch.window},
          {"hop", c.pitch.hop},
          {"silence_db", c.pitch.silence_db}}},
        {"vad",
         {{"frame", c.vad.frame},
          {"hop", c.vad.hop},
          {"floor_percentile", c.vad.floor_percentile},
          {"margin_db", c.vad.margin_db},
          {"min_pause", c.vad.min_pause},
          {"min_speech", c.vad.min_speech},
          {"absolute_floor_db", c.vad.absolute_floor_db},
          {"smoothing_frames", c.vad.smoothing_frames}}},
        {"ddk",
         {{"frame", c.ddk.frame},
          {"hop", c.ddk.hop},
          {"smoothing_frames", c.ddk.smoothing_frames},
          {"min_gap", c.ddk.min_gap},
          {"min_prominence_db", c.ddk.min_prominence_db},
          {"rate_basis", c.ddk.rate_basis == SyllableRateBasis::Articulation ? "articulation" : "speaking"}}},
        {"facial",
         {{"ear_threshold", c.facial.ear_threshold},
          {"blink_min_frames", c.facial.blink_min_frames},
          {"max_gap", c.facial.max_gap}}},
        {"outliers",
         {{"max_speaking_rate", c.outliers.max_speaking_rate},
          {"max_articulation_rate", c.outliers.max_articulation_rate},
          {"max_ppt", c.outliers.max_ppt}}},
        {"fps", c.fps ? json(*c.fps) : json(nullptr)},
    };
}

std::string config_hash(const json& config) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : config.dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> acoustic_metrics_for(const TaskKind& task) {
    switch (task.kind()) {
        case TaskKind::Kind::HeldVowel: return {"mean_f0", "jitter", "shimmer", "hnr", "cpp", "intensity"};
        case TaskKind::Kind::Sit:
        case TaskKind::Kind::Bamboo:
            return {"speaking_duration", "articulation_duration", "speaking_rate", "articulation_rate", "ppt",
                    "intensity"};
        case TaskKind::Kind::Ddk:
            return {"speaking_duration", "articulation_duration", "syllable_rate", "syllable_count", "ctv",
                    "intensity"};
        case TaskKind::Kind::PictureDescription: return {"intensity"};
    }
    return {};
}

namespace {

struct Outcome {
    std::vector<UtteranceMetric> rows;
    json errors = json::array();
    bool any_ok = false;
};

/// Metric values of one utterance keyed by name; failures keep their status.
class Sheet {
public:
    Sheet(const SessionManifest& m, const Utterance& u, Outcome& out) : m_(m), u_(u), out_(out) {}

    void set(const std::string& metric, double value, std::string status = "ok") {
        entries_[metric] = {value, std::move(status)};
    }

    void fail(std::string_view stage, const std::vector<std::string>& metrics, const std::exception& e) {
        const std::string code = error_code_name(e);
        for (const auto& m : metrics) {
            if (!entries_.contains(m)) entries_[m] = {std::nullopt, "error:" + code};
        }
        out_.errors.push_back({{"subject_id", m_.subject.subject_id},
                               {"utterance_id", u_.utterance_id},
                               {"task", u_.task.to_string()},
                               {"stage", stage},
                               {"code", code},
                               {"metrics", metrics},
                               {"message", e.what()}});
    }

    /// Runs `fn`; on failure every metric in `metrics` without a value gets the error status.
    template <class Fn>
    bool attempt(std::string_view stage, const std::vector<std::string>& metrics, Fn&& fn) {
        try {
            fn();
            return true;
        } catch (const std::exception& e) {
            fail(stage, metrics, e);
            return false;
        }
    }

    void emit(const std::vector<std::string>& metrics) {
        for (const auto& name : metrics) {
            UtteranceMetric r;
            r.subject_id = m_.subject.subject_id;
            r.task = u_.task;
            r.utterance_id = u_.utterance_id;
            r.metric = name;
            r.unit = find_metric(name)->unit;
            const auto it = entries_.find(name);
            if (it == entries_.end()) {
                r.status = "error:Internal";
            } else {
                r.value = it->second.first;
                r.status = it->second.second;
            }
            if (r.value && !std::isfinite(*r.value)) {
                r.value.reset();
                r.status = "error:DegenerateSignal";
            }
            if (r.value) r.value = round_sig9(*r.value);
            if (r.ok()) out_.any_ok = true;
            out_.rows.push_back(std::move(r));
        }
    }

private:
    const SessionManifest& m_;
    const Utterance& u_;
    Outcome& out_;
    std::map<std::string, std::pair<std::optional<double>, std::string>> entries_;
};

void acoustic(const SessionManifest& m, const Utterance& u, const ExtractConfig& c, Sheet& sheet) {
    const auto names = acoustic_metrics_for(u.task);
    std::optional<AudioClip> clip;
    if (!sheet.attempt("audio", names, [&] { clip = read_wav(u.audio); })) return;

    std::optional<SpeechSegmentation> seg;
    std::vector<std::string> needs_speech = {"intensity"};
    if (u.task.is_reading() || u.task.kind() == TaskKind::Kind::Ddk) needs_speech = names;
    if (sheet.attempt("speech", needs_speech, [&] { seg = detect_speech(*clip, c.vad); })) {
        sheet.attempt("intensity", {"intensity"}, [&] { sheet.set("intensity", speech_intensity(*clip, seg->segments)); });
    }

    switch (u.task.kind()) {
        case TaskKind::Kind::HeldVowel: {
            std::optional<F0Contour> contour;
            if (!sheet.attempt("pitch", {"mean_f0", "jitter", "shimmer", "hnr"},
                               [&] { contour = estimate_f0(*clip, c.pitch); })) {
                sheet.attempt("cpp", {"cpp"}, [&] { sheet.set("cpp", cpp(*clip, {.f_min = c.pitch.f_min, .f_max = c.pitch.f_max})); });
                break;
            }
            sheet.attempt("pitch", {"mean_f0"}, [&] {
                const auto mean = contour->mean_f0();
                if (!mean) throw Error(ErrorCode::InsufficientVoicing, "no voiced frames in held vowel");
                sheet.set("mean_f0", *mean);
            });
            sheet.attempt("periods", {"jitter", "shimmer"}, [&] {
                std::vector<double> periods, amplitudes;
                for (const auto& cycle : period_sequence(*clip, *contour)) {
                    periods.push_back(cycle.period);
                    amplitudes.push_back(cycle.amplitude);
                }
                sheet.attempt("jitter", {"jitter"}, [&] { sheet.set("jitter", jitter_local(periods)); });
                sheet.attempt("shimmer", {"shimmer"}, [&] { sheet.set("shimmer", shimmer_local(amplitudes)); });
            });
            sheet.attempt("hnr", {"hnr"}, [&] { sheet.set("hnr", hnr(*clip, *contour)); });
            sheet.attempt("cpp", {"cpp"}, [&] { sheet.set("cpp", cpp(*clip, {.f_min = c.pitch.f_min, .f_max = c.pitch.f_max})); });
            break;
        }
        case TaskKind::Kind::Sit:
        case TaskKind::Kind::Bamboo: {
            if (!seg) break;
            sheet.attempt("timing", names, [&] {
                const auto words = m.tasks.expected_words(u.task);
                const TimingMetrics t = timing_metrics(*seg, *words);
                const auto excluded = apply_outlier_filter(t, u.task, c.outliers);
                const std::string status = excluded ? "excluded:" + std::string(to_string(*excluded)) : "ok";
                sheet.set("speaking_duration", t.speaking_duration, status);
                sheet.set("articulation_duration", t.articulation_duration, status);
                sheet.set("speaking_rate", t.speaking_rate, status);
                sheet.set("articulation_rate", t.articulation_rate, status);
                sheet.set("ppt", t.ppt, status);
            });
            break;
        }
        case TaskKind::Kind::Ddk: {
            if (!seg) break;
            sheet.attempt("ddk", names, [&] {
                const auto onsets = detect_syllable_onsets(*clip, *seg, c.ddk);
                const DdkMetrics d = ddk_metrics(onsets, *seg, c.ddk);
                sheet.set("speaking_duration", d.speaking_duration);
                sheet.set("articulation_duration", d.articulation_duration);
                sheet.set("syllable_rate", d.syllable_rate);
                sheet.set("syllable_count", d.syllable_count);
                if (d.ctv) {
                    sheet.set("ctv", *d.ctv);
                } else {
                    sheet.fail("ddk", {"ctv"}, Error(ErrorCode::TooFewCycles, "ctv needs at least three onsets"));
                }
            });
            break;
        }
        case TaskKind::Kind::PictureDescription: break;
    }
    sheet.emit(names);
}

LandmarkTrack load_track(const Utterance& u, const ExtractConfig& c) {
    const fs::path& path = *u.landmarks;
    if (u.fps) return read_landmark_csv(path, *u.fps);
    if (fs::exists(landmark_sidecar_path(path))) return read_landmark_csv(path);
    if (c.fps) return read_landmark_csv(path, *c.fps);
    throw Error(ErrorCode::MissingFile, "no frame rate for " + path.string() + ": set it in the manifest, a sidecar or --fps");
}

void facial(const Utterance& u, const ExtractConfig& c, Sheet& sheet) {
    const auto& names = facial_metric_names();
    sheet.attempt("landmarks", names, [&] {
        const FacialMetricSet set = facial_metrics(load_track(u, c), c.facial);
        for (const auto& [name, value] : set.values) sheet.set(name, value);
    });
    sheet.emit(names);
}

Outcome process(const SessionManifest& m, const Utterance& u, const ExtractConfig& c) {
    Outcome out;
    Sheet sheet(m, u, out);
    acoustic(m, u, c, sheet);
    if (u.landmarks) facial(u, c, sheet);
    return out;
}

json subject_record(const SubjectProfile& s) {
    json j = subject_to_json(s);
    j["cohort"] = std::string(to_string(s.cohort()));
    return j;
}

}  // namespace

ExtractResult extract_metrics(const std::vector<SessionManifest>& manifests, const ExtractConfig& config) {
    config.validate();
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        for (std::size_t k = 0; k < manifests[i].utterances.size(); ++k) jobs.emplace_back(i, k);
    }
    std::vector<Outcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto work = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            const auto& m = manifests[jobs[j].first];
            outcomes[j] = process(m, m.utterances[jobs[j].second], config);
        }
    };
    unsigned workers = config.workers != 0 ? config.workers : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(1, jobs.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }

    ExtractResult result;
    result.utterances = jobs.size();
    for (const auto& m : manifests) result.subjects.push_back(m.subject);
    for (auto& o : outcomes) {
        if (o.any_ok) ++result.ok_utterances;
        for (auto& r : o.rows) result.rows.push_back(std::move(r));
        for (auto& e : o.errors) result.errors.push_back(std::move(e));
    }
    return result;
}

json rounded(json j) {
    if (j.is_number_float()) {
        const double v = j.get<double>();
        return std::isfinite(v) ? json(round_sig9(v)) : json(nullptr);
    }
    if (j.is_array() || j.is_object()) {
        for (auto& child : j) child = rounded(std::move(child));
    }
    return j;
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << rounded(j).dump(2) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

ExtractResult run_extract(const std::vector<fs::path>& manifest_paths, const fs::path& out_dir,
                          const ExtractConfig& config) {
    if (manifest_paths.empty()) throw Error(ErrorCode::InvalidArgument, "no manifests given");
    config.validate();

    json load_errors = json::array();
    std::vector<SessionManifest> manifests;
    std::set<std::string> seen;
    for (const auto& path : manifest_paths) {
        try {
            SessionManifest m = load_manifest(path);
            // One session per subject: the first manifest of a subject wins.
            if (!seen.insert(m.subject.subject_id).second) {
                throw Error(ErrorCode::DuplicateSession, "subject '" + m.subject.subject_id + "' already has a session");
            }
            manifests.push_back(std::move(m));
        } catch (const std::exception& e) {
            load_errors.push_back({{"manifest", path.generic_string()},
                                   {"stage", "manifest"},
                                   {"code", error_code_name(e)},
                                   {"message", e.what()}});
        }
    }

    ExtractResult result = extract_metrics(manifests, config);
    for (auto& e : result.errors) load_errors.push_back(std::move(e));
    result.errors = std::move(load_errors);

    fs::create_directories(out_dir);
    const json cfg = to_json(config);
    write_metrics_csv(out_dir / "metrics.csv", result.rows,
                      {{"tool", "speechbio"},
                       {"tool_version", std::string(kToolVersion)},
                       {"config_hash", config_hash(cfg)},
                       {"intensity_reference", "dBFS+90 uncalibrated"},
                       {"kinematic_units", "per frame, divided by inter-lachrymal distance"}});
    json subjects = json::array();
    for (const auto& s : result.subjects) subjects.push_back(subject_record(s));
    write_json_file(out_dir / "subjects.json", subjects);
    write_json_file(out_dir / "errors.json", result.errors);
    return result;
}

void AnalyzeConfig::validate() const {
    require(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
    require(bootstrap_resamples >= 100, "bootstrap needs at least 100 resamples");
    require(folds >= 2, "cross-validation needs at least two folds");
    require(min_presence > 0.0 && min_presence <= 1.0, "presence fraction must be in (0, 1]");
}

json to_json(const AnalyzeConfig& c) {
    return {{"seed", c.seed},
            {"alpha", c.alpha},
            {"bootstrap_ci", c.bootstrap_ci},
            {"bootstrap_resamples", c.bootstrap_resamples},
            {"impute_mean", c.impute_mean},
            {"folds", c.folds},
            {"use_rfe", c.use_rfe},
            {"min_presence", c.min_presence}};
}

namespace {

std::string modality_of(const std::string& metric) {
    const MetricInfo* info = find_metric(metric);
    return info != nullptr ? std::string(to_string(info->modality)) : "unknown";
}

std::string skipped(const std::exception& e) { return "skipped: " + error_code_name(e); }

json contrasts_stage(const MetricTable& z, const ZScoreResult& zres, const AnalyzeConfig& cfg, const fs::path& out_dir,
                     AnalyzeSummary& summary) {
    ContrastOptions opts;
    opts.alpha = cfg.alpha;
    opts.bootstrap_ci = cfg.bootstrap_ci;
    opts.bootstrap_resamples = cfg.bootstrap_resamples;
    opts.seed = cfg.seed;
    const ContrastReport report = pairwise_contrasts(z, opts);
    summary.contrasts_status = report.status;

    std::ofstream csv(out_dir / "effects.csv");
    if (!csv) throw Error(ErrorCode::IoError, "cannot write effects.csv");
    csv << "metric,pair,delta,ci_lo,ci_hi,p\n";
    for (const auto& e : report.effects) {
        csv << e.metric << ',' << e.pair() << ',' << format_number(e.delta) << ',' << format_number(e.ci_lo) << ','
            << format_number(e.ci_hi) << ',' << format_number(e.p_value) << '\n';
    }

    std::map<std::string, const OmnibusResult*> omnibus;
    for (const auto& o : report.omnibus) omnibus[o.metric] = &o;
    json metrics = json::array();
    for (const auto& name : rank_by_bul_con(report.effects)) {
        json effects = json::array();
        for (const auto& e : report.effects) {
            if (e.metric != name) continue;
            effects.push_back({{"pair", e.pair()}, {"delta", e.delta}, {"ci_lo", e.ci_lo}, {"ci_hi", e.ci_hi}, {"p", e.p_value}});
        }
        json entry = {{"metric", name}, {"modality", modality_of(name)}, {"effects", effects}};
        if (const auto it = omnibus.find(name); it != omnibus.end()) {
            entry["omnibus_h"] = it->second->h;
            entry["omnibus_p"] = it->second->p;
        }
        metrics.push_back(entry);
    }
    json all_omnibus = json::array();
    for (const auto& o : report.omnibus) {
        all_omnibus.push_back({{"metric", o.metric}, {"h", o.h}, {"p", o.p}, {"status", o.status}});
    }
    json degenerate = json::array();
    for (const auto& d : zres.degenerate) {
        degenerate.push_back({{"metric", d.metric}, {"sex", std::string(to_string(d.sex))}, {"reason", d.reason}});
    }
    return {{"status", report.status},
            {"ranking", "metrics with a BUL-CON effect by decreasing |delta|, then other significant metrics by name"},
            {"alpha", cfg.alpha},
            {"ci_method", cfg.bootstrap_ci ? "percentile bootstrap" : "large-sample normal"},
            {"metrics", metrics},
            {"omnibus", all_omnibus},
            {"degenerate_groups", degenerate},
            {"notes", report.notes}};
}

struct PairJob {
    Cohort positive;
    Cohort negative;
};

json classify_pair(const MetricTable& z, const PairJob& job, const AnalyzeConfig& cfg, std::string& status,
                   std::vector<std::string>& roc_lines) {
    const std::string pair = std::string(to_string(job.positive)) + "-" + std::string(to_string(job.negative));
    json out = {{"pair", pair},
                {"positive", std::string(to_string(job.positive))},
                {"negative", std::string(to_string(job.negative))}};
    try {
        DesignMatrix d = classification_design(z, job.positive, job.negative);
        d.keep_features_present(cfg.min_presence);
        if (!cfg.impute_mean) d.drop_incomplete_rows();
        d.drop_constant_features();
        if (d.samples() == 0 || d.features() == 0) throw Error(ErrorCode::TooFewSamples, "no usable samples or features");

        CvOptions opts;
        opts.folds = cfg.folds;
        opts.seed = cfg.seed;
        opts.use_rfe = cfg.use_rfe;
        opts.impute_mean = cfg.impute_mean;
        const CvResult cv = crossvalidate(d.x, d.target, d.feature_names, opts);

        const auto positives = static_cast<int>(d.target.sum());
        out["samples"] = d.samples();
        out["positives"] = positives;
        out["negatives"] = static_cast<int>(d.samples()) - positives;
        out["features"] = d.feature_names;
        out["uar_mean"] = cv.uar_mean;
        out["uar_sd"] = cv.uar_sd;
        out["auc"] = cv.roc.auc;
        json folds = json::array();
        for (const auto& f : cv.folds) {
            std::vector<std::string> test_subjects;
            for (auto i : f.test_indices) test_subjects.push_back(d.subject_ids[i]);
            json fj = {{"fold", f.fold}, {"status", f.status}, {"test_subjects", test_subjects}};
            if (f.status == "ok") {
                fj["uar"] = f.uar;
                fj["sensitivity"] = f.sensitivity;
                fj["specificity"] = f.specificity;
                fj["rfe_k"] = f.rfe_k;
                fj["selected_features"] = f.selected_features;
                fj["intercept"] = f.intercept;
                fj["weights"] = f.weights;
            }
            folds.push_back(fj);
        }
        out["folds"] = folds;
        for (std::size_t i = 0; i < cv.roc.thresholds.size(); ++i) {
            const double t = cv.roc.thresholds[i];
            roc_lines.push_back(pair + ',' + (std::isinf(t) ? std::string("inf") : format_number(t)) + ',' +
                                format_number(cv.roc.fpr[i]) + ',' + format_number(cv.roc.tpr[i]));
        }
        status = "ok";
    } catch (const std::exception& e) {
        status = skipped(e);
    }
    out["status"] = status;
    return out;
}

json regression_cohort(const MetricTable& z, const std::map<std::string, double>& totals, Cohort cohort,
                       const AnalyzeConfig& cfg, std::string& status) {
    json out = {{"cohort", std::string(to_string(cohort))}};
    try {
        SeverityOptions opts;
        opts.min_presence = cfg.min_presence;
        const SeverityReport r = severity_regression(z, totals, cohort, opts);
        out["samples"] = r.samples;
        out["features_considered"] = r.features;
        out["skipped_collinear"] = r.path.skipped;
        json entries = json::array();
        int rank = 0;
        for (const auto& e : r.entries) {
            entries.push_back({{"rank", ++rank},
                               {"feature", e.feature},
                               {"modality", std::string(to_string(e.modality))},
                               {"sign", e.sign},
                               {"cumulative_r2", e.cumulative_r2}});
        }
        out["entries"] = entries;
        json path = json::array();
        for (const auto& s : r.path.steps) {
            json coefficients = json::object();
            for (Eigen::Index k = 0; k < s.coefficients.size(); ++k) {
                if (s.coefficients[k] != 0.0) coefficients[r.path.feature_names[static_cast<std::size_t>(k)]] = s.coefficients[k];
            }
            path.push_back({{"step", s.step},
                            {"entered", s.entered ? json(*s.entered) : json(nullptr)},
                            {"sign", s.sign},
                            {"dropped", s.dropped ? json(*s.dropped) : json(nullptr)},
                            {"lambda", s.lambda},
                            {"r2", s.r2},
                            {"coefficients", coefficients}});
        }
        out["path"] = path;
        status = "ok";
    } catch (const std::exception& e) {
        status = skipped(e);
    }
    out["status"] = status;
    return out;
}

}  // namespace

AnalyzeSummary run_analyze(const fs::path& metrics_csv, const fs::path& subjects_json, const fs::path& out_dir,
                           const AnalyzeConfig& config) {
    config.validate();
    const auto rows = read_metrics_csv(metrics_csv);

    std::ifstream in(subjects_json);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + subjects_json.string());
    json subjects_doc;
    try {
        subjects_doc = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, subjects_json.string() + ": " + e.what());
    }
    if (!subjects_doc.is_array()) throw Error(ErrorCode::ParseError, subjects_json.string() + ": expected an array");
    std::map<std::string, SubjectProfile> subjects;
    for (const auto& s : subjects_doc) {
        SubjectProfile p = subject_from_json(s);
        subjects.emplace(p.subject_id, std::move(p));
    }

    const MetricTable table = aggregate_by_task_type(rows, subjects);
    const ZScoreResult z = zscore_by_sex(table);
    fs::create_directories(out_dir);

    AnalyzeSummary summary;
    const json effects = contrasts_stage(z.table, z, config, out_dir, summary);
    write_json_file(out_dir / "effects_ranked.json", effects);

    // The three pairs are independent; results are gathered in a fixed order.
    const PairJob pairs[] = {{Cohort::BUL, Cohort::CON}, {Cohort::BUL, Cohort::PRE}, {Cohort::PRE, Cohort::CON}};
    std::string statuses[3];
    std::vector<std::string> roc_lines[3];
    std::future<json> futures[3];
    for (std::size_t i = 0; i < 3; ++i) {
        futures[i] = std::async(std::launch::async, [&, i] { return classify_pair(z.table, pairs[i], config, statuses[i], roc_lines[i]); });
    }
    json cv_pairs = json::array();
    for (std::size_t i = 0; i < 3; ++i) {
        cv_pairs.push_back(futures[i].get());
        summary.classification_status.emplace_back(cv_pairs.back()["pair"].get<std::string>(), statuses[i]);
    }
    write_json_file(out_dir / "cv_report.json",
                    {{"seed", config.seed},
                     {"folds", config.folds},
                     {"threshold", 0.5},
                     {"rfe", config.use_rfe},
                     {"roc", "pooled out-of-fold probabilities"},
                     {"pairs", cv_pairs}});
    std::ofstream roc(out_dir / "roc_points.csv");
    if (!roc) throw Error(ErrorCode::IoError, "cannot write roc_points.csv");
    roc << "pair,threshold,fpr,tpr\n";
    for (const auto& lines : roc_lines)
        for (const auto& l : lines) roc << l << '\n';

    std::map<std::string, double> totals;
    for (const auto& [id, s] : subjects) {
        if (s.alsfrs) totals[id] = s.alsfrs->total;
    }
    json analyses = json::array();
    for (Cohort c : {Cohort::PRE, Cohort::BUL}) {
        std::string status;
        analyses.push_back(regression_cohort(z.table, totals, c, config, status));
        summary.regression_status.emplace_back(std::string(to_string(c)), status);
    }
    write_json_file(out_dir / "lars_path.json", {{"target", "alsfrs_total"}, {"analyses", analyses}});

    write_json_file(out_dir / "analysis.json",
                    {{"tool_version", std::string(kToolVersion)},
                     {"config", to_json(config)},
                     {"subjects", subjects.size()},
                     {"metrics", table.metric_names().size()},
                     {"contrasts", summary.contrasts_status},
                     {"classification", summary.classification_status},
                     {"regression", summary.regression_status}});
    return summary;
}

}  // namespace speechbio
