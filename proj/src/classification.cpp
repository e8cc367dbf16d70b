#include "speechbio/classification.hpp"

#include "speechbio/design_matrix.hpp"
#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace speechbio {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd z(x.rows(), x.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(x.cols()) = x;
    return z;
}

double objective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& theta, double ridge) {
    const Eigen::VectorXd eta = z * theta;
    double f = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) f += softplus(eta(i)) - y(i) * eta(i);
    return f + 0.5 * ridge * theta.tail(theta.size() - 1).squaredNorm();
}

LogisticModel fit_from(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LogisticOptions& options,
                       Eigen::VectorXd theta) {
    const Eigen::MatrixXd z = with_intercept(x);
    const Eigen::Index p = z.cols();
    double f = objective(z, y, theta, options.ridge);
    for (int iter = 0; iter <= options.max_iterations; ++iter) {
        const Eigen::VectorXd eta = z * theta;
        Eigen::VectorXd prob(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            prob(i) = sigmoid(eta(i));
            w(i) = prob(i) * (1.0 - prob(i));
        }
        Eigen::VectorXd grad = z.transpose() * (prob - y);
        grad.tail(p - 1) += options.ridge * theta.tail(p - 1);
        if (grad.norm() < options.tolerance) {
            LogisticModel m;
            m.intercept = theta(0);
            m.weights = theta.tail(p - 1);
            m.iterations = iter;
            return m;
        }
        if (iter == options.max_iterations) break;

        Eigen::MatrixXd hess = z.transpose() * w.asDiagonal() * z;
        hess.diagonal().tail(p - 1).array() += options.ridge;
        hess.diagonal().array() += 1e-12 * (1.0 + hess.diagonal().maxCoeff());
        Eigen::VectorXd step = -hess.ldlt().solve(grad);
        double slope = grad.dot(step);
        if (!step.allFinite() || slope >= 0.0) {
            step = -grad;
            slope = -grad.squaredNorm();
        }
        Eigen::VectorXd next = theta + step;
        if (-slope < 1e-12 * (1.0 + std::abs(f))) {
            // Predicted decrease is at rounding level: objective comparisons are noise here.
            theta = std::move(next);
            f = objective(z, y, theta, options.ridge);
            continue;
        }
        double t = 1.0;
        double f_next = objective(z, y, next, options.ridge);
        while (f_next > f + 1e-4 * t * slope && t > 1e-14) {
            t *= 0.5;
            next = theta + t * step;
            f_next = objective(z, y, next, options.ridge);
        }
        if (!(f_next <= f)) break;
        if (next == theta) break;
        theta = std::move(next);
        f = f_next;
    }
    throw Error(ErrorCode::NonConvergence, "logistic regression did not reach the gradient tolerance");
}

Eigen::MatrixXd select_columns(const Eigen::MatrixXd& x, const std::vector<std::size_t>& cols) {
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = x.col(static_cast<Eigen::Index>(cols[k]));
    return out;
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(rows[k]));
    return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<Eigen::Index>(k)) = v(static_cast<Eigen::Index>(rows[k]));
    return out;
}

std::vector<std::size_t> survivors(std::size_t p, const std::vector<std::size_t>& order, std::size_t k) {
    std::vector<bool> gone(p, false);
    for (std::size_t i = 0; i < p - k && i < order.size(); ++i) gone[order[i]] = true;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < p; ++j) {
        if (!gone[j]) out.push_back(j);
    }
    return out;
}

struct Recall {
    double sensitivity;
    double specificity;
    double uar() const { return 0.5 * (sensitivity + specificity); }
};

Recall recall(const Eigen::VectorXd& prob, const Eigen::VectorXd& y) {
    int pos = 0, neg = 0, tp = 0, tn = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const bool predicted = prob(i) >= 0.5;
        if (y(i) > 0.5) {
            ++pos;
            tp += predicted ? 1 : 0;
        } else {
            ++neg;
            tn += predicted ? 0 : 1;
        }
    }
    return {pos > 0 ? static_cast<double>(tp) / pos : 0.0, neg > 0 ? static_cast<double>(tn) / neg : 0.0};
}

void impute(Eigen::MatrixXd& x, const Eigen::RowVectorXd& means) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (std::isnan(x(i, j))) x(i, j) = means(j);
        }
    }
}

struct TrainedFold {
    std::size_t k = 0;
    std::vector<std::size_t> selected;
    LogisticModel model;
};

/// Fits on standardized training rows: RFE to each candidate size, returns the models.
std::vector<TrainedFold> train_candidates(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                                          const std::vector<std::string>& names,
                                          const std::vector<std::size_t>& candidates, const LogisticOptions& options) {
    const auto p = static_cast<std::size_t>(xs.cols());
    const auto order = rfe_elimination_order(xs, y, names, candidates.front(), options);
    std::vector<TrainedFold> out;
    for (std::size_t k : candidates) {
        TrainedFold t;
        t.k = k;
        t.selected = survivors(p, order, k);
        t.model = fit_logistic(select_columns(xs, t.selected), y, options);
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<std::size_t> rfe_candidates(const CvOptions& options, std::size_t p) {
    std::vector<std::size_t> ks;
    if (!options.use_rfe) return {p};
    for (std::size_t k : options.rfe_grid) ks.push_back(std::clamp<std::size_t>(k, 1, std::max<std::size_t>(p, 1)));
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    return ks;
}

std::size_t choose_rfe_k(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                         const std::vector<std::size_t>& candidates, const CvOptions& options, std::uint64_t seed) {
    if (candidates.size() == 1) return candidates.front();
    const auto positives = static_cast<int>((y.array() > 0.5).count());
    const auto negatives = static_cast<int>(y.size()) - positives;
    if (std::min(positives, negatives) < options.inner_folds) return candidates.front();

    const auto folds = stratified_folds(y, options.inner_folds, seed);
    std::vector<double> score(candidates.size(), 0.0);
    for (int f = 0; f < options.inner_folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(i);
        const Eigen::MatrixXd xtr = select_rows(x, train);
        const auto st = Standardizer::fit(xtr);
        std::vector<TrainedFold> models;
        try {
            models = train_candidates(st.apply(xtr), select_rows(y, train), names, candidates, options.logistic);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonConvergence) throw;
            continue;
        }
        const Eigen::MatrixXd xte = st.apply(select_rows(x, test));
        const Eigen::VectorXd yte = select_rows(y, test);
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const auto prob = models[c].model.predict(select_columns(xte, models[c].selected));
            score[c] += recall(prob, yte).uar();
        }
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < candidates.size(); ++c) {
        if (score[c] > score[best]) best = c;
    }
    return candidates[best];
}

}  // namespace

Eigen::VectorXd LogisticModel::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd eta = (x * weights).array() + intercept;
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = sigmoid(eta(i));
    return eta;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LogisticOptions& options) {
    if (x.rows() != y.size() || x.rows() == 0) throw Error(ErrorCode::InvalidArgument, "design and target sizes differ");
    if (options.ridge < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge penalty must be non-negative");
    if (!x.allFinite()) throw Error(ErrorCode::InvalidArgument, "design contains non-finite values");
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    }
    return fit_from(x, y, options, Eigen::VectorXd::Zero(x.cols() + 1));
}

std::vector<std::size_t> rfe_elimination_order(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                               const std::vector<std::string>& names, std::size_t min_k,
                                               const LogisticOptions& options) {
    if (min_k < 1) throw Error(ErrorCode::InvalidArgument, "RFE target must be at least 1");
    if (names.size() != static_cast<std::size_t>(x.cols())) throw Error(ErrorCode::InvalidArgument, "one name per feature required");
    std::vector<std::size_t> active(names.size());
    std::iota(active.begin(), active.end(), 0);
    std::vector<std::size_t> order;
    while (active.size() > min_k) {
        const auto model = fit_logistic(select_columns(x, active), y, options);
        const Eigen::VectorXd mag = model.weights.cwiseAbs();
        const double smallest = mag.minCoeff();
        const double tol = 1e-9 * std::max(smallest, std::numeric_limits<double>::min());
        std::size_t drop = active.size();
        for (std::size_t k = 0; k < active.size(); ++k) {
            if (mag(static_cast<Eigen::Index>(k)) - smallest > tol) continue;
            if (drop == active.size() || names[active[k]] > names[active[drop]]) drop = k;
        }
        order.push_back(active[drop]);
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return order;
}

std::vector<std::size_t> rfe(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                             std::size_t target_k, const LogisticOptions& options) {
    const auto p = static_cast<std::size_t>(x.cols());
    if (target_k >= p) {
        std::vector<std::size_t> all(p);
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    return survivors(p, rfe_elimination_order(x, y, names, target_k, options), target_k);
}

RocCurve roc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "scores and labels differ in length");
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    const auto negatives = static_cast<std::ptrdiff_t>(labels.size()) - positives;
    if (positives == 0 || negatives == 0) throw Error(ErrorCode::SingleClass, "ROC needs both classes");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    long tp = 0, fp = 0;
    for (std::size_t i = 0; i < idx.size();) {
        const double t = scores[idx[i]];
        for (; i < idx.size() && scores[idx[i]] == t; ++i) (labels[idx[i]] == 1 ? tp : fp) += 1;
        const double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
        const double tpr = static_cast<double>(tp) / static_cast<double>(positives);
        curve.auc += 0.5 * (fpr - curve.fpr.back()) * (tpr + curve.tpr.back());
        curve.thresholds.push_back(t);
        curve.fpr.push_back(fpr);
        curve.tpr.push_back(tpr);
    }
    return curve;
}

std::vector<int> stratified_folds(const Eigen::VectorXd& y, int k, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(y.size());
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
    std::vector<int> fold(n, 0);
    int counter[2] = {0, 0};
    for (std::size_t i : perm) {
        int& c = counter[y(static_cast<Eigen::Index>(i)) > 0.5 ? 1 : 0];
        fold[i] = c % k;
        ++c;
    }
    return fold;
}

CvResult crossvalidate(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names,
                       const CvOptions& options) {
    if (x.rows() != y.size()) throw Error(ErrorCode::InvalidArgument, "design and target sizes differ");
    if (names.size() != static_cast<std::size_t>(x.cols())) throw Error(ErrorCode::InvalidArgument, "one name per feature required");
    if (options.folds < 2) throw Error(ErrorCode::InvalidArgument, "at least two folds required");
    if (x.hasNaN() && !options.impute_mean) throw Error(ErrorCode::InvalidArgument, "design has missing values");
    const auto positives = static_cast<int>((y.array() > 0.5).count());
    const auto negatives = static_cast<int>(y.size()) - positives;
    if (std::min(positives, negatives) < options.folds) {
        throw Error(ErrorCode::ClassTooSmall, "each class needs at least " + std::to_string(options.folds) + " members");
    }

    const auto folds = stratified_folds(y, options.folds, options.seed);
    const auto candidates = rfe_candidates(options, static_cast<std::size_t>(x.cols()));
    CvResult result;
    result.scores.assign(static_cast<std::size_t>(y.size()), std::numeric_limits<double>::quiet_NaN());
    for (int f = 0; f < options.folds; ++f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(i);
        Eigen::MatrixXd xtr = select_rows(x, train);
        Eigen::MatrixXd xte = select_rows(x, test);
        if (options.impute_mean) {
            const auto means = Standardizer::fit(xtr).mean;
            impute(xtr, means);
            impute(xte, means);
        }
        const Eigen::VectorXd ytr = select_rows(y, train);
        const Eigen::VectorXd yte = select_rows(y, test);
        const auto st = Standardizer::fit(xtr);
        const Eigen::MatrixXd xtr_s = st.apply(xtr);
        const Eigen::MatrixXd xte_s = st.apply(xte);

        FoldResult fr;
        fr.fold = f;
        fr.test_indices = test;
        try {
            const std::size_t k = choose_rfe_k(xtr_s, ytr, names, candidates, options,
                                               options.seed + 1 + static_cast<std::uint64_t>(f));
            TrainedFold trained = train_candidates(xtr_s, ytr, names, {k}, options.logistic).front();
            const Eigen::VectorXd prob = trained.model.predict(select_columns(xte_s, trained.selected));
            const Recall r = recall(prob, yte);
            fr.sensitivity = r.sensitivity;
            fr.specificity = r.specificity;
            fr.uar = r.uar();
            fr.rfe_k = k;
            for (std::size_t j : trained.selected) fr.selected_features.push_back(names[j]);
            fr.intercept = trained.model.intercept;
            fr.weights.assign(trained.model.weights.data(), trained.model.weights.data() + trained.model.weights.size());
            for (std::size_t i = 0; i < test.size(); ++i) result.scores[test[i]] = prob(static_cast<Eigen::Index>(i));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NonConvergence) throw;
            fr.status = "NonConvergence";
        }
        result.folds.push_back(std::move(fr));
    }

    std::vector<double> uars;
    for (const auto& fr : result.folds) {
        if (fr.status == "ok") uars.push_back(fr.uar);
    }
    if (uars.empty()) throw Error(ErrorCode::NonConvergence, "no fold converged");
    const auto m = static_cast<double>(uars.size());
    for (double u : uars) result.uar_mean += u / m;
    double ss = 0.0;
    for (double u : uars) ss += (u - result.uar_mean) * (u - result.uar_mean);
    result.uar_sd = uars.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;

    std::vector<double> scored;
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double s = result.scores[static_cast<std::size_t>(i)];
        if (std::isnan(s)) continue;
        scored.push_back(s);
        labels.push_back(y(i) > 0.5 ? 1 : 0);
    }
    result.roc = roc(scored, labels);
    return result;
}

}  // namespace speechbio
