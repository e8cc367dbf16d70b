#pragma once

#include "speechbio/cohort_stats.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace speechbio {

/// Samples by features; missing values are NaN until removed or imputed.
struct DesignMatrix {
    Eigen::MatrixXd x;
    std::vector<std::string> feature_names;
    Eigen::VectorXd target;
    std::vector<std::string> subject_ids;

    Eigen::Index samples() const noexcept { return x.rows(); }
    Eigen::Index features() const noexcept { return x.cols(); }

    /// Keeps features observed in at least `min_fraction` of the samples.
    void keep_features_present(double min_fraction);
    /// Row-wise deletion of samples with any missing feature.
    void drop_incomplete_rows();
    /// Drops features whose observed values are all equal.
    void drop_constant_features();
    bool has_missing() const;
};

/// Binary design over two cohorts: target 1 for `positive`, 0 for `negative`.
/// Features are every metric of the table, in name order.
DesignMatrix classification_design(const MetricTable& table, Cohort positive, Cohort negative);

/// Design over one cohort with the given per-subject target; subjects without a target are skipped.
DesignMatrix regression_design(const MetricTable& table, Cohort cohort,
                               const std::map<std::string, double>& target_by_subject);

/// Column means and sample standard deviations, ignoring NaN. Zero spread maps to 1.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

}  // namespace speechbio
