#include "oracles.hpp"

#include "speechbio/cohort_stats.hpp"
#include "speechbio/error.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace speechbio;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SubjectProfile subject(const std::string& id, Cohort cohort, Sex sex) {
    SubjectProfile s;
    s.subject_id = id;
    s.sex = sex;
    s.is_control = cohort == Cohort::CON;
    std::array<int, 12> items{};
    items.fill(4);
    if (cohort == Cohort::BUL) items[0] = 2;
    if (cohort != Cohort::CON) s.alsfrs = score_alsfrs(items);
    return s;
}

UtteranceMetric row(const std::string& id, TaskKind task, const std::string& metric, double v,
                    std::string status = "ok") {
    return {id, task, id + task.to_string(), metric, v, "", std::move(status)};
}

MetricTable cohort_table(std::uint64_t seed, double shift, int per_cohort = 12) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    MetricTable t;
    int id = 0;
    for (Cohort c : {Cohort::CON, Cohort::PRE, Cohort::BUL}) {
        for (int i = 0; i < per_cohort; ++i) {
            const std::string sid = "S" + std::to_string(100 + id++);
            const Sex sex = i % 2 == 0 ? Sex::Female : Sex::Male;
            t.rows.push_back({sid, c, sex, "planted", n(rng) + (c == Cohort::BUL ? shift : 0.0)});
            t.rows.push_back({sid, c, sex, "null", n(rng)});
        }
    }
    std::sort(t.rows.begin(), t.rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.metric, a.subject_id) < std::tie(b.metric, b.subject_id);
    });
    return t;
}

}  // namespace

TEST_CASE("aggregation by task type") {
    std::map<std::string, SubjectProfile> subjects{{"A", subject("A", Cohort::CON, Sex::Female)},
                                                   {"B", subject("B", Cohort::BUL, Sex::Male)}};
    const std::vector<UtteranceMetric> rows = {
        row("A", TaskKind::sit(1), "speaking_rate", 200.0),
        row("A", TaskKind::sit(2), "speaking_rate", 210.0),
        row("A", TaskKind::sit(3), "speaking_rate", 190.0),
        row("A", TaskKind::held_vowel(), "jitter", 1.5),
        row("A", TaskKind::sit(1), "speaking_duration", 2.0),
        row("A", TaskKind::sit(2), "speaking_duration", 4.0),
        row("A", TaskKind::ddk(), "speaking_duration", 5.0),
        row("B", TaskKind::bamboo(), "ppt", 85.0, "excluded:ppt"),
        row("B", TaskKind::held_vowel(), "hnr", 12.0),
        row("B", TaskKind::held_vowel(), "cpp", NAN, "error:InsufficientVoicing"),
        row("Z", TaskKind::held_vowel(), "hnr", 99.0),
    };
    const auto t = aggregate_by_task_type(rows, subjects);
    CHECK(t.value("A", "speaking_rate") == 200.0);
    CHECK(t.value("A", "jitter") == 1.5);
    CHECK(t.value("A", "speaking_duration.sit") == 3.0);
    CHECK(t.value("A", "speaking_duration.ddk") == 5.0);
    CHECK_FALSE(t.value("A", "speaking_duration").has_value());
    CHECK_FALSE(t.value("B", "ppt").has_value());
    CHECK_FALSE(t.value("B", "cpp").has_value());
    CHECK(t.value("B", "hnr") == 12.0);
    CHECK_FALSE(t.value("Z", "hnr").has_value());
    for (const auto& r : t.rows) {
        if (r.subject_id == "B") CHECK(r.cohort == Cohort::BUL);
    }
    CHECK(std::is_sorted(t.rows.begin(), t.rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.metric, a.subject_id) < std::tie(b.metric, b.subject_id);
    }));
}

TEST_CASE("z-scoring by sex") {
    MetricTable t;
    t.rows = {{"A", Cohort::CON, Sex::Female, "m", 10.0}, {"B", Cohort::CON, Sex::Female, "m", 20.0},
              {"C", Cohort::CON, Sex::Male, "m", 100.0},  {"D", Cohort::BUL, Sex::Male, "m", 300.0},
              {"E", Cohort::BUL, Sex::Male, "m", 200.0},  {"A", Cohort::CON, Sex::Female, "flat", 1.0},
              {"B", Cohort::CON, Sex::Female, "flat", 1.0}};
    const auto z = zscore_by_sex(t);
    CHECK(z.table.value("A", "m").value() == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-12));
    CHECK(z.table.value("B", "m").value() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));
    CHECK(z.table.value("C", "m").value() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(z.table.value("E", "m").value() == doctest::Approx(0.0).scale(1.0));
    CHECK_FALSE(z.table.value("A", "flat").has_value());
    REQUIRE(z.degenerate.size() == 1);
    CHECK(z.degenerate[0].metric == "flat");
}

TEST_CASE("z-scored groups have mean 0 and sd 1") {
    std::mt19937_64 rng(8);
    std::lognormal_distribution<double> v(3.0, 1.0);
    MetricTable t;
    for (int i = 0; i < 40; ++i) {
        const Sex sex = i % 3 == 0 ? Sex::Male : Sex::Female;
        for (const char* m : {"a", "b", "c"}) t.rows.push_back({"S" + std::to_string(i), Cohort::CON, sex, m, v(rng) * 1000.0});
    }
    const auto z = zscore_by_sex(t);
    CHECK(z.degenerate.empty());
    for (const char* m : {"a", "b", "c"}) {
        for (Sex sex : {Sex::Female, Sex::Male}) {
            std::vector<double> vals;
            for (const auto& r : z.table.rows) {
                if (r.metric == m && r.sex == sex) vals.push_back(r.value);
            }
            CHECK(std::abs(mean(vals)) <= 1e-12);
            CHECK(std::abs(sample_sd(vals) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("Kruskal-Wallis hand case") {
    const std::vector<std::vector<double>> g = {{1, 2, 3}, {4, 5, 6}};
    const auto kw = kruskal_wallis(g);
    CHECK(std::abs(kw.h - 3.857) <= 1e-3);
    CHECK(std::abs(kw.h - 27.0 / 7.0) <= 1e-12);
    CHECK(std::abs(kw.p - 0.0495) <= 1e-3);
    CHECK(kw.p == doctest::Approx(std::erfc(std::sqrt(27.0 / 14.0))).epsilon(1e-12));
    CHECK(kw.df == 1);

    const std::vector<std::vector<double>> same = {{1, 4, 5}, {2, 3, 6}};
    CHECK(kruskal_wallis(same).h < 0.3);
    const std::vector<std::vector<double>> tied = {{2, 2}, {2, 2, 2}};
    CHECK(code_of([&] { kruskal_wallis(tied); }) == ErrorCode::AllValuesTied);
    const std::vector<std::vector<double>> one = {{1, 2, 3}};
    CHECK_THROWS_AS(kruskal_wallis(one), Error);
    const std::vector<std::vector<double>> empty = {{1, 2}, {}};
    CHECK_THROWS_AS(kruskal_wallis(empty), Error);
}

TEST_CASE("Kruskal-Wallis against the brute-force rank oracle") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> groups(2 + rng() % 3);
        for (auto& g : groups) {
            g.resize(2 + rng() % 5);
            // Small integer support forces ties.
            for (double& v : g) v = static_cast<double>(rng() % 7);
        }
        try {
            const auto kw = kruskal_wallis(groups);
            CHECK(kw.h == doctest::Approx(oracle::kw_h(groups)).epsilon(1e-12));
            CHECK(kw.p >= 0.0);
            CHECK(kw.p <= 1.0);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AllValuesTied);
        }
    }
}

TEST_CASE("Kruskal-Wallis is invariant under monotone transforms") {
    std::mt19937_64 rng(99);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> groups(2 + rng() % 3);
        for (auto& g : groups) {
            g.resize(3 + rng() % 8);
            for (double& v : g) v = n(rng);
        }
        auto transformed = groups;
        for (auto& g : transformed)
            for (double& v : g) v = std::exp(3.0 * v) + 7.0;
        const auto a = kruskal_wallis(groups);
        const auto b = kruskal_wallis(transformed);
        CHECK(a.h == b.h);
        CHECK(a.p == b.p);
    }
}

TEST_CASE("Glass delta") {
    const auto d = glass_delta(std::vector<double>{2, 4, 6}, std::vector<double>{1, 2, 3});
    CHECK(d.delta == 2.0);
    const double se = std::sqrt(6.0 / 9.0 + 4.0 / 4.0);
    CHECK(d.ci_lo == doctest::Approx(2.0 - 1.96 * se).epsilon(1e-12));
    CHECK(d.ci_hi == doctest::Approx(2.0 + 1.96 * se).epsilon(1e-12));

    const std::vector<double> same{1.0, 2.5, 4.0};
    const auto z = glass_delta(same, same);
    CHECK(z.delta == 0.0);
    CHECK(z.ci_lo < 0.0);
    CHECK(z.ci_hi > 0.0);

    CHECK(code_of([] { glass_delta(std::vector<double>{1, 2}, std::vector<double>{3, 3, 3}); }) ==
          ErrorCode::ZeroControlVariance);
    CHECK_THROWS_AS(glass_delta(std::vector<double>{1, 2}, std::vector<double>{3}), Error);
}

TEST_CASE("Glass delta reflects with the treatment") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t(8), c(10);
        for (double& v : t) v = n(rng) + 1.0;
        for (double& v : c) v = 2.0 * n(rng);
        const double mc = mean(c);
        std::vector<double> reflected = t;
        for (double& v : reflected) v = 2.0 * mc - v;
        CHECK(glass_delta(reflected, c).delta == doctest::Approx(-glass_delta(t, c).delta).epsilon(1e-9));
    }
}

TEST_CASE("bootstrap interval") {
    const std::vector<double> t{2.1, 3.9, 6.2, 4.4, 5.0, 3.3}, c{1.0, 2.2, 2.9, 1.7, 2.4};
    const auto a = glass_delta_bootstrap(t, c, 2000, 5);
    const auto b = glass_delta_bootstrap(t, c, 2000, 5);
    CHECK(a.ci_lo == b.ci_lo);
    CHECK(a.ci_hi == b.ci_hi);
    CHECK(a.delta == glass_delta(t, c).delta);
    CHECK(a.ci_lo <= a.delta);
    CHECK(a.delta <= a.ci_hi);
}

TEST_CASE("pairwise contrasts find the planted shift") {
    const auto table = zscore_by_sex(cohort_table(3, 2.0)).table;
    const auto report = pairwise_contrasts(table);
    CHECK(report.status == "ok");
    REQUIRE(report.omnibus.size() == 2);
    bool planted_bul_con = false;
    for (const auto& e : report.effects) {
        CHECK(e.ci_lo <= e.delta);
        CHECK(e.delta <= e.ci_hi);
        CHECK(e.p_value >= 0.0);
        CHECK(e.p_value <= 1.0);
        if (e.metric == "planted" && e.pair() == "BUL-CON") {
            planted_bul_con = true;
            CHECK(e.delta > 0.0);
            CHECK(e.p_value < 0.05);
        }
    }
    CHECK(planted_bul_con);
    for (const auto& o : report.omnibus) {
        if (o.metric == "null" && o.p >= 0.05) {
            for (const auto& e : report.effects) CHECK(e.metric != "null");
        }
    }
    const auto ranked = rank_by_bul_con(report.effects);
    REQUIRE_FALSE(ranked.empty());
    CHECK(ranked.front() == "planted");
}

TEST_CASE("contrast gate and degenerate cases") {
    MetricTable con_only;
    for (int i = 0; i < 6; ++i) con_only.rows.push_back({"S" + std::to_string(i), Cohort::CON, Sex::Female, "m", i * 1.0});
    CHECK(pairwise_contrasts(con_only).status == "insufficient cohorts");

    // Omnibus p far above alpha: no pairwise entries.
    MetricTable flat;
    for (int i = 0; i < 6; ++i) {
        flat.rows.push_back({"C" + std::to_string(i), Cohort::CON, Sex::Female, "m", static_cast<double>(i)});
        flat.rows.push_back({"B" + std::to_string(i), Cohort::BUL, Sex::Female, "m", static_cast<double>(i) + 0.5});
    }
    const auto r = pairwise_contrasts(flat);
    REQUIRE(r.omnibus.size() == 1);
    CHECK(r.omnibus[0].p > 0.05);
    CHECK(r.effects.empty());

    // Constant controls are skipped with a note.
    MetricTable constant;
    for (int i = 0; i < 6; ++i) {
        constant.rows.push_back({"C" + std::to_string(i), Cohort::CON, Sex::Female, "m", 1.0});
        constant.rows.push_back({"B" + std::to_string(i), Cohort::BUL, Sex::Female, "m", 5.0 + i});
    }
    const auto c = pairwise_contrasts(constant);
    CHECK(c.effects.empty());
    CHECK_FALSE(c.notes.empty());
}

TEST_CASE("ranking by the BUL-CON pair") {
    std::vector<EffectSizeReport> effects = {
        {"b", Cohort::BUL, Cohort::CON, -1.5, -2.0, -1.0, 0.01},
        {"a", Cohort::BUL, Cohort::CON, 1.5, 1.0, 2.0, 0.01},
        {"c", Cohort::BUL, Cohort::CON, 0.4, 0.1, 0.7, 0.04},
        {"d", Cohort::PRE, Cohort::CON, 3.0, 2.0, 4.0, 0.001},
    };
    CHECK(rank_by_bul_con(effects) == std::vector<std::string>{"a", "b", "c", "d"});
}

TEST_CASE("ranking is unchanged by raw unit rescaling") {
    auto raw = cohort_table(6, 1.5, 15);
    for (auto& r : raw.rows) {
        if (r.metric == "null") r.value += 0.9 * (r.cohort == Cohort::BUL ? 1.0 : 0.0);
    }
    auto rescaled = raw;
    for (auto& r : rescaled.rows) r.value = r.metric == "planted" ? 1000.0 * r.value - 5.0 : 0.01 * r.value;
    const auto a = rank_by_bul_con(pairwise_contrasts(zscore_by_sex(raw).table).effects);
    const auto b = rank_by_bul_con(pairwise_contrasts(zscore_by_sex(rescaled).table).effects);
    CHECK(a == b);
}
