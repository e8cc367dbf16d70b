#pragma once

#include "speechbio/metrics.hpp"
#include "speechbio/session.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace speechbio {

struct MetricRow {
    std::string subject_id;
    Cohort cohort = Cohort::CON;
    Sex sex = Sex::Female;
    std::string metric;
    double value = 0.0;

    friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Subject-level metric values, one row per (subject, metric), sorted by metric then subject.
struct MetricTable {
    std::vector<MetricRow> rows;
    /// Task types that contributed to the averages.
    std::vector<std::string> averaged_task_types;

    std::vector<std::string> metric_names() const;
    std::optional<double> value(const std::string& subject_id, const std::string& metric) const;
    /// Values of one metric for one cohort, in subject order.
    std::vector<double> values(const std::string& metric, Cohort cohort) const;
};

/// Means each subject's retained utterance values per metric. Durations are averaged within
/// their task type only and renamed "<metric>.<task type>". Rows of unknown subjects are ignored.
MetricTable aggregate_by_task_type(std::span<const UtteranceMetric> rows,
                                   const std::map<std::string, SubjectProfile>& subjects);

struct DegenerateGroup {
    std::string metric;
    Sex sex;
    std::string reason;
};

struct ZScoreResult {
    MetricTable table;
    /// (metric, sex) groups with n < 2 or zero spread; their rows are dropped.
    std::vector<DegenerateGroup> degenerate;
};

/// Standardizes each metric within each sex using the sample standard deviation.
ZScoreResult zscore_by_sex(const MetricTable& table);

struct KruskalWallis {
    double h = 0.0;
    double p = 1.0;
    int df = 0;
};

/// Rank test with average ranks for ties and the tie correction; p from chi-square(k - 1).
KruskalWallis kruskal_wallis(std::span<const std::vector<double>> groups);

struct GlassDelta {
    double delta = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

/// (mean_t - mean_c) / sd_c with the large-sample 95% interval.
GlassDelta glass_delta(std::span<const double> treatment, std::span<const double> control);

/// Percentile bootstrap interval of Glass' delta, resampling each group independently.
GlassDelta glass_delta_bootstrap(std::span<const double> treatment, std::span<const double> control,
                                 int resamples, std::uint64_t seed);

struct EffectSizeReport {
    std::string metric;
    Cohort treatment = Cohort::BUL;
    Cohort control = Cohort::CON;
    double delta = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double p_value = 1.0;

    std::string pair() const;
};

struct OmnibusResult {
    std::string metric;
    double h = 0.0;
    double p = 1.0;
    std::string status;  ///< "ok" or why the test did not run
};

struct ContrastOptions {
    double alpha = 0.05;
    bool bootstrap_ci = false;
    int bootstrap_resamples = 2000;
    std::uint64_t seed = 0;
};

struct ContrastReport {
    std::string status = "ok";
    std::vector<OmnibusResult> omnibus;
    std::vector<EffectSizeReport> effects;
    /// Skipped pairs with reasons, e.g. a constant control group.
    std::vector<std::string> notes;
};

/// Omnibus Kruskal-Wallis per metric over the cohorts present; metrics with p < alpha get
/// pairwise tests and Glass' delta for BUL-CON, PRE-CON and BUL-PRE.
ContrastReport pairwise_contrasts(const MetricTable& table, const ContrastOptions& options = {});

/// Metrics with a BUL-CON effect, ordered by decreasing |delta| (name breaks ties),
/// followed by the remaining significant metrics in name order.
std::vector<std::string> rank_by_bul_con(const std::vector<EffectSizeReport>& effects);

}  // namespace speechbio
