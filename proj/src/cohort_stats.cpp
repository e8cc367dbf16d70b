#include "speechbio/cohort_stats.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>

namespace speechbio {

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v, double mean) {
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

void sort_rows(std::vector<MetricRow>& rows) {
    std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.metric, a.subject_id) < std::tie(b.metric, b.subject_id);
    });
}

}  // namespace

std::vector<std::string> MetricTable::metric_names() const {
    std::set<std::string> names;
    for (const auto& r : rows) names.insert(r.metric);
    return {names.begin(), names.end()};
}

std::optional<double> MetricTable::value(const std::string& subject_id, const std::string& metric) const {
    for (const auto& r : rows) {
        if (r.subject_id == subject_id && r.metric == metric) return r.value;
    }
    return std::nullopt;
}

std::vector<double> MetricTable::values(const std::string& metric, Cohort cohort) const {
    std::vector<double> out;
    for (const auto& r : rows) {
        if (r.metric == metric && r.cohort == cohort) out.push_back(r.value);
    }
    return out;
}

MetricTable aggregate_by_task_type(std::span<const UtteranceMetric> rows,
                                   const std::map<std::string, SubjectProfile>& subjects) {
    std::map<std::pair<std::string, std::string>, std::pair<double, int>> sums;
    std::set<std::string> task_types;
    for (const auto& r : rows) {
        if (!r.ok() || !subjects.contains(r.subject_id)) continue;
        std::string metric = r.metric;
        if (is_duration_metric(metric)) metric += "." + std::string(r.task.type_name());
        auto& [sum, n] = sums[{r.subject_id, metric}];
        sum += *r.value;
        ++n;
        task_types.insert(std::string(r.task.type_name()));
    }
    MetricTable table;
    table.averaged_task_types.assign(task_types.begin(), task_types.end());
    for (const auto& [key, acc] : sums) {
        const SubjectProfile& s = subjects.at(key.first);
        table.rows.push_back({key.first, s.cohort(), s.sex, key.second, acc.first / acc.second});
    }
    sort_rows(table.rows);
    return table;
}

ZScoreResult zscore_by_sex(const MetricTable& table) {
    std::map<std::pair<std::string, Sex>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        groups[{table.rows[i].metric, table.rows[i].sex}].push_back(i);
    }
    ZScoreResult result;
    result.table.averaged_task_types = table.averaged_task_types;
    for (const auto& [key, idx] : groups) {
        if (idx.size() < 2) {
            result.degenerate.push_back({key.first, key.second, "fewer than two subjects"});
            continue;
        }
        std::vector<double> v;
        for (std::size_t i : idx) v.push_back(table.rows[i].value);
        const double mean = mean_of(v);
        const double sd = sample_sd(v, mean);
        if (!(sd > 0.0)) {
            result.degenerate.push_back({key.first, key.second, "zero variance"});
            continue;
        }
        for (std::size_t i : idx) {
            MetricRow row = table.rows[i];
            row.value = (row.value - mean) / sd;
            result.table.rows.push_back(std::move(row));
        }
    }
    sort_rows(result.table.rows);
    return result;
}

KruskalWallis kruskal_wallis(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw Error(ErrorCode::InvalidArgument, "Kruskal-Wallis needs at least two groups");
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw Error(ErrorCode::InvalidArgument, "Kruskal-Wallis group is empty");
        for (double v : groups[g]) pooled.emplace_back(v, g);
    }
    const auto n = static_cast<double>(pooled.size());
    if (pooled.size() < 3) throw Error(ErrorCode::InvalidArgument, "Kruskal-Wallis needs at least three values");
    std::sort(pooled.begin(), pooled.end());

    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const double t = static_cast<double>(j - i);
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].second] += avg_rank;
        tie_term += t * t * t - t;
        i = j;
    }
    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (correction <= 0.0) throw Error(ErrorCode::AllValuesTied, "all values are tied");

    double s = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        s += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    }
    KruskalWallis kw;
    kw.df = static_cast<int>(groups.size()) - 1;
    kw.h = std::max(0.0, (12.0 / (n * (n + 1.0)) * s - 3.0 * (n + 1.0)) / correction);
    const boost::math::chi_squared dist(kw.df);
    kw.p = boost::math::cdf(boost::math::complement(dist, kw.h));
    return kw;
}

GlassDelta glass_delta(std::span<const double> treatment, std::span<const double> control) {
    if (treatment.empty()) throw Error(ErrorCode::InvalidArgument, "treatment group is empty");
    if (control.size() < 2) throw Error(ErrorCode::ZeroControlVariance, "control group needs two values");
    const double mc = mean_of(control);
    const double sd = sample_sd(control, mc);
    if (!(sd > 0.0)) throw Error(ErrorCode::ZeroControlVariance, "control group is constant");
    const double nt = static_cast<double>(treatment.size());
    const double nc = static_cast<double>(control.size());
    GlassDelta g;
    g.delta = (mean_of(treatment) - mc) / sd;
    const double se = std::sqrt((nt + nc) / (nt * nc) + g.delta * g.delta / (2.0 * (nc - 1.0)));
    g.ci_lo = g.delta - 1.96 * se;
    g.ci_hi = g.delta + 1.96 * se;
    return g;
}

GlassDelta glass_delta_bootstrap(std::span<const double> treatment, std::span<const double> control,
                                 int resamples, std::uint64_t seed) {
    GlassDelta g = glass_delta(treatment, control);
    if (resamples < 2) throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least two resamples");
    std::mt19937_64 rng(seed);
    std::vector<double> t(treatment.size()), c(control.size()), deltas;
    deltas.reserve(static_cast<std::size_t>(resamples));
    for (int b = 0; b < resamples; ++b) {
        for (auto& v : t) v = treatment[rng() % treatment.size()];
        for (auto& v : c) v = control[rng() % control.size()];
        const double mc = mean_of(c);
        const double sd = sample_sd(c, mc);
        if (sd > 0.0) deltas.push_back((mean_of(t) - mc) / sd);
    }
    if (deltas.size() < 2) throw Error(ErrorCode::ZeroControlVariance, "bootstrap control resamples are constant");
    std::sort(deltas.begin(), deltas.end());
    const auto at = [&](double q) {
        const double pos = q * static_cast<double>(deltas.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, deltas.size() - 1);
        return deltas[lo] + (pos - static_cast<double>(lo)) * (deltas[hi] - deltas[lo]);
    };
    // Percentile intervals need not cover a skewed point estimate; widen to keep lo <= delta <= hi.
    g.ci_lo = std::min(at(0.025), g.delta);
    g.ci_hi = std::max(at(0.975), g.delta);
    return g;
}

std::string EffectSizeReport::pair() const {
    return std::string(to_string(treatment)) + "-" + std::string(to_string(control));
}

ContrastReport pairwise_contrasts(const MetricTable& table, const ContrastOptions& options) {
    ContrastReport report;
    std::set<Cohort> present;
    for (const auto& r : table.rows) present.insert(r.cohort);
    if (present.size() < 2) {
        report.status = "insufficient cohorts";
        return report;
    }
    constexpr std::pair<Cohort, Cohort> kPairs[] = {
        {Cohort::BUL, Cohort::CON}, {Cohort::PRE, Cohort::CON}, {Cohort::BUL, Cohort::PRE}};
    constexpr Cohort kOrder[] = {Cohort::CON, Cohort::BUL, Cohort::PRE};

    for (const auto& metric : table.metric_names()) {
        OmnibusResult omni{metric, 0.0, 1.0, "ok"};
        std::vector<std::vector<double>> groups;
        for (Cohort c : kOrder) {
            auto v = table.values(metric, c);
            if (!v.empty()) groups.push_back(std::move(v));
        }
        if (groups.size() < 2) {
            omni.status = "fewer than two cohorts";
            report.omnibus.push_back(omni);
            continue;
        }
        try {
            const auto kw = kruskal_wallis(groups);
            omni.h = kw.h;
            omni.p = kw.p;
        } catch (const Error& e) {
            omni.status = std::string(to_string(e.code()));
            report.omnibus.push_back(omni);
            continue;
        }
        report.omnibus.push_back(omni);
        if (!(omni.p < options.alpha)) continue;

        for (const auto& [treatment, control] : kPairs) {
            const auto t = table.values(metric, treatment);
            const auto c = table.values(metric, control);
            if (t.empty() || c.empty()) continue;
            EffectSizeReport e{metric, treatment, control};
            try {
                const std::vector<double> pair_groups[] = {t, c};
                e.p_value = t.size() + c.size() >= 3 ? kruskal_wallis(pair_groups).p : 1.0;
            } catch (const Error&) {
                e.p_value = 1.0;
            }
            try {
                const GlassDelta g = options.bootstrap_ci
                                         ? glass_delta_bootstrap(t, c, options.bootstrap_resamples, options.seed)
                                         : glass_delta(t, c);
                e.delta = g.delta;
                e.ci_lo = g.ci_lo;
                e.ci_hi = g.ci_hi;
            } catch (const Error& err) {
                report.notes.push_back(metric + " " + e.pair() + ": " + err.what());
                continue;
            }
            report.effects.push_back(e);
        }
    }
    return report;
}

std::vector<std::string> rank_by_bul_con(const std::vector<EffectSizeReport>& effects) {
    std::vector<std::pair<double, std::string>> ranked;
    std::set<std::string> others;
    for (const auto& e : effects) {
        if (e.treatment == Cohort::BUL && e.control == Cohort::CON) {
            ranked.emplace_back(std::abs(e.delta), e.metric);
        } else {
            others.insert(e.metric);
        }
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<std::string> out;
    for (const auto& [d, m] : ranked) {
        out.push_back(m);
        others.erase(m);
    }
    out.insert(out.end(), others.begin(), others.end());
    return out;
}

}  // namespace speechbio
