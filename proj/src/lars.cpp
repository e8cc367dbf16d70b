#include "speechbio/lars.hpp"

#include "speechbio/design_matrix.hpp"
#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace speechbio {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

Eigen::MatrixXd active_columns(const Eigen::MatrixXd& x, const std::vector<std::size_t>& active,
                               const Eigen::VectorXd& sign) {
    Eigen::MatrixXd xa(x.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) {
        const auto j = static_cast<Eigen::Index>(active[k]);
        xa.col(static_cast<Eigen::Index>(k)) = sign(j) * x.col(j);
    }
    return xa;
}

bool collinear_with(const Eigen::MatrixXd& x, const std::vector<std::size_t>& active, std::size_t j) {
    const Eigen::VectorXd xj = x.col(static_cast<Eigen::Index>(j));
    const double norm2 = xj.squaredNorm();
    if (norm2 == 0.0) return true;
    if (active.empty()) return false;
    const Eigen::MatrixXd xa = active_columns(x, active, Eigen::VectorXd::Ones(x.cols()));
    const Eigen::VectorXd coef = xa.colPivHouseholderQr().solve(xj);
    return (xj - xa * coef).squaredNorm() <= 1e-10 * norm2;
}

/// Picks the largest |c_j| among eligible features; near-ties go to the smaller name.
std::size_t strongest(const Eigen::VectorXd& c, const std::vector<bool>& eligible,
                      const std::vector<std::string>& names, double tol) {
    double best = -1.0;
    for (std::size_t j = 0; j < eligible.size(); ++j) {
        if (eligible[j]) best = std::max(best, std::abs(c(static_cast<Eigen::Index>(j))));
    }
    std::size_t pick = kNone;
    for (std::size_t j = 0; j < eligible.size(); ++j) {
        if (!eligible[j] || std::abs(c(static_cast<Eigen::Index>(j))) < best - tol) continue;
        if (pick == kNone || names[j] < names[pick]) pick = j;
    }
    return pick;
}

}  // namespace

std::vector<std::pair<std::string, double>> LarsPath::entries() const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : steps) {
        if (s.entered) out.emplace_back(*s.entered, s.r2);
    }
    return out;
}

LarsPath lars_lasso_path(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<std::string>& names) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (y.size() != n) throw Error(ErrorCode::InvalidArgument, "design and target sizes differ");
    if (names.size() != static_cast<std::size_t>(p)) throw Error(ErrorCode::InvalidArgument, "one name per feature required");
    if (n < 2) throw Error(ErrorCode::TooFewSamples, "LARS needs at least two samples");
    if (!x.allFinite() || !y.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite input");

    LarsPath path;
    path.feature_names = names;
    const double tss = y.squaredNorm();
    if (p == 0 || tss == 0.0) return path;

    const auto pu = static_cast<std::size_t>(p);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd sign = Eigen::VectorXd::Zero(p);
    std::vector<std::size_t> active;
    std::vector<bool> in_active(pu, false), excluded(pu, false);

    Eigen::VectorXd c = x.transpose() * y;
    const double c0 = c.cwiseAbs().maxCoeff();
    const double col_scale = x.colwise().norm().maxCoeff();
    if (c0 <= 1e-10 * std::sqrt(tss) * col_scale) return path;
    const double tol = 1e-12 * c0;
    const auto max_active = static_cast<std::size_t>(std::min<Eigen::Index>(n - 1, p));

    auto eligible = [&](std::size_t blocked) {
        std::vector<bool> e(pu);
        for (std::size_t j = 0; j < pu; ++j) e[j] = !in_active[j] && !excluded[j] && j != blocked;
        return e;
    };

    std::size_t pending = strongest(c, eligible(kNone), names, tol);
    std::size_t blocked = kNone;
    const int max_steps = 8 * static_cast<int>(p) + 16;
    for (int step = 1; step <= max_steps; ++step) {
        LarsStep rec;
        rec.step = static_cast<int>(path.steps.size()) + 1;
        c = x.transpose() * (y - x * beta);

        while (pending != kNone && collinear_with(x, active, pending)) {
            path.skipped.push_back(names[pending]);
            excluded[pending] = true;
            pending = active.empty() ? strongest(c, eligible(blocked), names, tol) : kNone;
        }
        if (pending != kNone) {
            const double cj = c(static_cast<Eigen::Index>(pending));
            sign(static_cast<Eigen::Index>(pending)) = cj >= 0.0 ? 1.0 : -1.0;
            active.push_back(pending);
            in_active[pending] = true;
            rec.entered = names[pending];
            rec.sign = cj >= 0.0 ? 1 : -1;
        }
        if (active.empty()) break;

        double big_c = 0.0;
        for (std::size_t j : active) big_c = std::max(big_c, std::abs(c(static_cast<Eigen::Index>(j))));
        if (big_c <= tol) break;
        // Inactive features tied with the active set at full correlation are exact linear
        // combinations of it (up to sign) and would otherwise sit on the boundary forever.
        for (std::size_t j = 0; j < pu; ++j) {
            if (in_active[j] || excluded[j] || std::abs(c(static_cast<Eigen::Index>(j))) < big_c - 1e-9 * c0) continue;
            if (collinear_with(x, active, j)) {
                path.skipped.push_back(names[j]);
                excluded[j] = true;
            }
        }

        const Eigen::MatrixXd xa = active_columns(x, active, sign);
        const Eigen::MatrixXd gram = xa.transpose() * xa;
        const Eigen::VectorXd gi1 = gram.ldlt().solve(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(active.size())));
        const double norm_a = 1.0 / std::sqrt(gi1.sum());
        const Eigen::VectorXd w = norm_a * gi1;
        const Eigen::VectorXd u = xa * w;
        const Eigen::VectorXd a = x.transpose() * u;

        double gamma = big_c / norm_a;
        std::size_t next = kNone;
        if (active.size() < max_active) {
            const auto e = eligible(blocked);
            for (std::size_t j = 0; j < pu; ++j) {
                if (!e[j]) continue;
                const auto jj = static_cast<Eigen::Index>(j);
                for (const double g : {(big_c - c(jj)) / (norm_a - a(jj)), (big_c + c(jj)) / (norm_a + a(jj))}) {
                    if (!(g > 0.0) || !std::isfinite(g)) continue;
                    if (g < gamma * (1.0 - 1e-12) || (g <= gamma * (1.0 + 1e-12) && next != kNone && names[j] < names[next])) {
                        gamma = std::min(gamma, g);
                        next = j;
                    }
                }
            }
        }

        std::size_t drop = kNone;
        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto j = static_cast<Eigen::Index>(active[k]);
            const double d = sign(j) * w(static_cast<Eigen::Index>(k));
            const double g = -beta(j) / d;
            if (g > 1e-14 * gamma && g < gamma) {
                gamma = g;
                drop = k;
            }
        }

        for (std::size_t k = 0; k < active.size(); ++k) {
            const auto j = static_cast<Eigen::Index>(active[k]);
            beta(j) += gamma * sign(j) * w(static_cast<Eigen::Index>(k));
        }
        blocked = kNone;
        pending = next;
        if (drop != kNone) {
            const std::size_t j = active[drop];
            beta(static_cast<Eigen::Index>(j)) = 0.0;
            sign(static_cast<Eigen::Index>(j)) = 0.0;
            in_active[j] = false;
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
            rec.dropped = names[j];
            blocked = j;
            pending = kNone;
        }

        rec.coefficients = beta;
        rec.lambda = std::max(0.0, big_c - gamma * norm_a);
        rec.r2 = std::clamp(1.0 - (y - x * beta).squaredNorm() / tss, 0.0, 1.0);
        path.steps.push_back(std::move(rec));

        if (drop == kNone && next == kNone) break;
        if (path.steps.back().lambda <= tol) break;
    }
    return path;
}

SeverityReport severity_regression(const MetricTable& table, const std::map<std::string, double>& alsfrs_total,
                                   Cohort cohort, const SeverityOptions& options) {
    DesignMatrix d = regression_design(table, cohort, alsfrs_total);
    d.keep_features_present(options.min_presence);
    d.drop_incomplete_rows();
    d.drop_constant_features();
    if (static_cast<std::size_t>(d.samples()) < options.min_samples) {
        throw Error(ErrorCode::TooFewSamples, std::to_string(d.samples()) + " complete " +
                                                  std::string(to_string(cohort)) + " subjects, need " +
                                                  std::to_string(options.min_samples));
    }
    SeverityReport report;
    report.cohort = cohort;
    report.samples = static_cast<std::size_t>(d.samples());
    report.features = d.feature_names;

    const Eigen::MatrixXd xs = Standardizer::fit(d.x).apply(d.x);
    const Eigen::VectorXd yc = d.target.array() - d.target.mean();
    report.path = lars_lasso_path(xs, yc, d.feature_names);
    for (const auto& s : report.path.steps) {
        if (!s.entered) continue;
        const MetricInfo* info = find_metric(*s.entered);
        report.entries.push_back({*s.entered, info ? info->modality : Modality::Acoustic, s.sign, s.r2});
    }
    return report;
}

}  // namespace speechbio
