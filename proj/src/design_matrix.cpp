#include "speechbio/design_matrix.hpp"

#include <cmath>
#include <limits>
#include <map>

namespace speechbio {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

DesignMatrix build(const MetricTable& table, const std::vector<std::string>& subjects,
                   const std::vector<double>& targets) {
    DesignMatrix d;
    d.feature_names = table.metric_names();
    d.subject_ids = subjects;
    d.x = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(subjects.size()),
                                    static_cast<Eigen::Index>(d.feature_names.size()), kNaN);
    d.target = Eigen::Map<const Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(targets.size()));

    std::map<std::string, Eigen::Index> row_of, col_of;
    for (std::size_t i = 0; i < subjects.size(); ++i) row_of[subjects[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < d.feature_names.size(); ++j) col_of[d.feature_names[j]] = static_cast<Eigen::Index>(j);
    for (const auto& r : table.rows) {
        const auto it = row_of.find(r.subject_id);
        if (it != row_of.end()) d.x(it->second, col_of.at(r.metric)) = r.value;
    }
    return d;
}

void keep_columns(DesignMatrix& d, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd x(d.x.rows(), static_cast<Eigen::Index>(cols.size()));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        x.col(static_cast<Eigen::Index>(k)) = d.x.col(cols[k]);
        names.push_back(d.feature_names[static_cast<std::size_t>(cols[k])]);
    }
    d.x = std::move(x);
    d.feature_names = std::move(names);
}

}  // namespace

void DesignMatrix::keep_features_present(double min_fraction) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const auto present = (x.col(j).array() == x.col(j).array()).count();
        if (x.rows() > 0 && static_cast<double>(present) >= min_fraction * static_cast<double>(x.rows())) {
            cols.push_back(j);
        }
    }
    keep_columns(*this, cols);
}

void DesignMatrix::drop_incomplete_rows() {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!x.row(i).hasNaN()) rows.push_back(i);
    }
    Eigen::MatrixXd nx(static_cast<Eigen::Index>(rows.size()), x.cols());
    Eigen::VectorXd nt(static_cast<Eigen::Index>(rows.size()));
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        nx.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
        nt(static_cast<Eigen::Index>(k)) = target(rows[k]);
        ids.push_back(subject_ids[static_cast<std::size_t>(rows[k])]);
    }
    x = std::move(nx);
    target = std::move(nt);
    subject_ids = std::move(ids);
}

void DesignMatrix::drop_constant_features() {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (std::isnan(x(i, j))) continue;
            lo = std::min(lo, x(i, j));
            hi = std::max(hi, x(i, j));
        }
        if (hi > lo) cols.push_back(j);
    }
    keep_columns(*this, cols);
}

bool DesignMatrix::has_missing() const { return x.hasNaN(); }

DesignMatrix classification_design(const MetricTable& table, Cohort positive, Cohort negative) {
    std::map<std::string, double> labels;
    for (const auto& r : table.rows) {
        if (r.cohort == positive) labels[r.subject_id] = 1.0;
        else if (r.cohort == negative) labels[r.subject_id] = 0.0;
    }
    std::vector<std::string> ids;
    std::vector<double> y;
    for (const auto& [id, label] : labels) {
        ids.push_back(id);
        y.push_back(label);
    }
    return build(table, ids, y);
}

DesignMatrix regression_design(const MetricTable& table, Cohort cohort,
                               const std::map<std::string, double>& target_by_subject) {
    std::map<std::string, double> targets;
    for (const auto& r : table.rows) {
        if (r.cohort != cohort) continue;
        const auto it = target_by_subject.find(r.subject_id);
        if (it != target_by_subject.end()) targets[r.subject_id] = it->second;
    }
    std::vector<std::string> ids;
    std::vector<double> y;
    for (const auto& [id, t] : targets) {
        ids.push_back(id);
        y.push_back(t);
    }
    return build(table, ids, y);
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
    Standardizer s;
    s.mean = Eigen::RowVectorXd::Zero(x.cols());
    s.scale = Eigen::RowVectorXd::Ones(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        double sum = 0.0;
        int n = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (!std::isnan(x(i, j))) {
                sum += x(i, j);
                ++n;
            }
        }
        if (n == 0) continue;
        const double mean = sum / n;
        double ss = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (!std::isnan(x(i, j))) ss += (x(i, j) - mean) * (x(i, j) - mean);
        }
        s.mean(j) = mean;
        const double sd = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
        s.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean).array().rowwise() / scale.array();
}

}  // namespace speechbio
