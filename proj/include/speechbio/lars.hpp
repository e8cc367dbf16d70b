#pragma once

#include "speechbio/cohort_stats.hpp"
#include "speechbio/metrics.hpp"

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace speechbio {

/// One segment of the path, from the previous knot to this one.
struct LarsStep {
    int step = 0;
    std::optional<std::string> entered;  ///< feature joining at the start of the segment
    int sign = 0;                        ///< sign of the entering feature's correlation
    std::optional<std::string> dropped;  ///< feature leaving at the end (coefficient hit zero)
    Eigen::VectorXd coefficients;        ///< at the knot ending the segment
    double lambda = 0.0;                 ///< max |correlation| with the residual at the knot
    double r2 = 0.0;                     ///< cumulative R^2 at the knot
};

struct LarsPath {
    std::vector<std::string> feature_names;
    std::vector<LarsStep> steps;
    /// Features rejected on entry because they are collinear with the active set.
    std::vector<std::string> skipped;

    /// Entered features in order, with the R^2 of the knot their segment ends at.
    std::vector<std::pair<std::string, double>> entries() const;
};

/// Least-angle regression with the lasso modification: a coefficient that would change sign
/// is removed from the active set. Ties on entry go to the smaller feature name. The path ends
/// at the least-squares fit, or when min(n - 1, p) features are active, or when no feature
/// correlates with the residual. X should have standardized columns and y be centered.
LarsPath lars_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const std::vector<std::string>& names);

struct SeverityEntry {
    std::string feature;
    Modality modality = Modality::Acoustic;
    int sign = 0;
    double cumulative_r2 = 0.0;
};

struct SeverityReport {
    Cohort cohort = Cohort::PRE;
    std::size_t samples = 0;
    std::vector<std::string> features;  ///< columns kept after the presence rule
    LarsPath path;
    std::vector<SeverityEntry> entries;
};

struct SeverityOptions {
    /// A metric is kept when observed for at least this fraction of the cohort.
    double min_presence = 0.8;
    std::size_t min_samples = 5;
};

/// Predicts the ALSFRS-R total of one cohort from its metrics. Features below the presence
/// threshold are dropped, then subjects missing any kept feature; columns are re-standardized
/// within the cohort and the target centered. Throws TooFewSamples below `min_samples`.
SeverityReport severity_regression(const MetricTable& table, const std::map<std::string, double>& alsfrs_total,
                                   Cohort cohort, const SeverityOptions& options = {});

}  // namespace speechbio
