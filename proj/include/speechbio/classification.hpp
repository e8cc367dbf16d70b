#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace speechbio {

struct LogisticModel {
    double intercept = 0.0;
    Eigen::VectorXd weights;
    int iterations = 0;

    /// Probability of class 1 for each row.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

struct LogisticOptions {
    double ridge = 1e-4;  ///< L2 penalty on the weights; the intercept is not penalized
    double tolerance = 1e-8;
    int max_iterations = 200;
};

/// Newton iteration with backtracking on the penalized negative log-likelihood, stopping
/// when the gradient norm drops below the tolerance. Throws NonConvergence otherwise.
LogisticModel fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const LogisticOptions& options = {});

/// Features in elimination order: each fit drops the feature with the smallest |weight|.
/// Weights within 1e-9 relative count as tied and the greatest name goes first.
/// Elimination stops once `min_k` features remain; survivors are not listed.
std::vector<std::size_t> rfe_elimination_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const std::vector<std::string>& names, std::size_t min_k,
                                               const LogisticOptions& options = {});

/// Column indices of the `target_k` surviving features, ascending.
std::vector<std::size_t> rfe(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const std::vector<std::string>& names, std::size_t target_k,
                             const LogisticOptions& options = {});

struct RocCurve {
    /// Thresholds in decreasing order; the first is +inf (nothing predicted positive).
    std::vector<double> thresholds;
    std::vector<double> fpr;
    std::vector<double> tpr;
    double auc = 0.0;
};

/// Scores at or above a threshold count as positive; AUC by the trapezoid rule.
RocCurve roc(const std::vector<double>& scores, const std::vector<int>& labels);

struct FoldResult {
    int fold = 0;
    std::string status = "ok";  ///< "NonConvergence" for a skipped fold
    double uar = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    std::size_t rfe_k = 0;
    std::vector<std::string> selected_features;
    std::vector<std::size_t> test_indices;
    double intercept = 0.0;
    std::vector<double> weights;  ///< over selected_features, standardized scale
};

struct CvResult {
    std::vector<FoldResult> folds;
    double uar_mean = 0.0;  ///< over converged folds
    double uar_sd = 0.0;
    RocCurve roc;
    /// Pooled out-of-fold probabilities, indexed like the input rows; NaN for skipped folds.
    std::vector<double> scores;
};

struct CvOptions {
    int folds = 5;
    std::uint64_t seed = 0;
    bool use_rfe = true;
    std::vector<std::size_t> rfe_grid{3, 5, 8, 12};
    int inner_folds = 3;
    /// Fill missing values with training-fold means; otherwise NaN input is rejected.
    bool impute_mean = false;
    LogisticOptions logistic;
};

/// Stratified fold assignment. One seeded permutation of all rows is dealt to folds by a
/// per-class round robin, so swapping the class labels yields the same folds.
std::vector<int> stratified_folds(const Eigen::VectorXd& y, int k, std::uint64_t seed);

/// Stratified k-fold logistic regression. Within each fold: standardize on the training
/// rows, choose the RFE size by inner cross-validation (smaller k wins ties), run RFE,
/// fit, and score the test rows at probability 0.5. Throws ClassTooSmall when a class
/// has fewer than `folds` members. Folds whose fit does not converge are reported and left
/// out of the summary.
CvResult crossvalidate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                       const CvOptions& options = {});

}  // namespace speechbio
