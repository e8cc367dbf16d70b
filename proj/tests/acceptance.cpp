// Acceptance suite: one PASS/FAIL line per criterion. Usage: speechbio_acceptance <speechbio-cli>

#include "oracles.hpp"
#include "table_metrics.hpp"

#include "speechbio/classification.hpp"
#include "speechbio/cohort_stats.hpp"
#include "speechbio/ddk.hpp"
#include "speechbio/facial.hpp"
#include "speechbio/lars.hpp"
#include "speechbio/metrics.hpp"
#include "speechbio/pipeline.hpp"
#include "speechbio/synth.hpp"
#include "speechbio/timing.hpp"
#include "speechbio/voice_quality.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace speechbio;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Collects failed checks of one criterion.
class Criterion {
public:
    void check(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        failed_ += ok ? 0 : 1;
    }
    bool passed() const { return failed_ == 0; }
    std::string failures() const {
        std::string s;
        for (const auto& f : failures_) s += (s.empty() ? "" : "; ") + f;
        if (failed_ > static_cast<int>(failures_.size())) s += "; ...";
        return s;
    }

private:
    std::vector<std::string> failures_;
    int failed_ = 0;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

std::string voice_quality(Criterion& c) {
    const auto t0 = Clock::now();
    for (double p : {0.01, 0.02, 0.04}) {
        for (double s : {0.05, 0.15}) {
            synth::PulseTrainSpec spec;
            spec.jitter = p;
            spec.shimmer = s;
            spec.seed = 17;
            const auto m = phonation_metrics(synth::pulse_train(spec).clip);
            const std::string tag = "p=" + fmt(100 * p) + "% s=" + fmt(100 * s) + "%: ";
            c.check(m.jitter_local >= 50.0 * p && m.jitter_local <= 150.0 * p, tag + "jitter " + fmt(m.jitter_local));
            c.check(m.shimmer_local >= 50.0 * s && m.shimmer_local <= 150.0 * s, tag + "shimmer " + fmt(m.shimmer_local));
        }
    }
    synth::PulseTrainSpec clean;
    clean.seed = 1;
    const auto f0 = estimate_f0(synth::pulse_train(clean).clip).mean_f0();
    c.check(f0 && std::abs(*f0 - 100.0) <= 1.0, "100 Hz train mean F0 " + (f0 ? fmt(*f0) : std::string("none")));
    const double elapsed = seconds_since(t0);
    c.check(elapsed < 5.0, "runtime " + fmt(elapsed) + " s");
    return "mean F0 " + fmt(f0.value_or(NAN)) + " Hz, runtime " + fmt(elapsed) + " s";
}

std::string timing_arithmetic(Criterion& c) {
    const auto seg = [](std::vector<Interval> s) { return SpeechSegmentation{std::move(s)}; };
    const auto near = [&](double got, double want, const std::string& what) {
        c.check(std::abs(got - want) <= 1e-9, what + " " + fmt(got) + " != " + fmt(want));
    };
    const auto a = timing_metrics(seg({{0.0, 1.0}, {2.0, 3.0}}), 10);
    near(a.speaking_duration, 3.0, "speaking_duration");
    near(a.articulation_duration, 2.0, "articulation_duration");
    near(a.ppt, 100.0 / 3.0, "ppt");
    near(a.speaking_rate, 200.0, "speaking_rate");
    near(a.articulation_rate, 300.0, "articulation_rate");
    const auto b = timing_metrics(seg({{0.5, 1.5}, {1.75, 2.0}, {3.0, 4.5}}), 15);
    near(b.speaking_duration, 4.0, "speaking_duration");
    near(b.articulation_duration, 2.75, "articulation_duration");
    near(b.ppt, 31.25, "ppt");
    near(b.speaking_rate, 225.0, "speaking_rate");
    near(b.articulation_rate, 15.0 * 60.0 / 2.75, "articulation_rate");

    const double eps = 1e-9;
    const auto bamboo = TaskKind::bamboo();
    const auto with = [](double sr, double ar, double ppt) {
        TimingMetrics m;
        m.speaking_rate = sr;
        m.articulation_rate = ar;
        m.ppt = ppt;
        return m;
    };
    c.check(apply_outlier_filter(with(250.0 + eps, 300.0, 20.0), bamboo) == ExclusionReason::SpeakingRate, "speaking rate 250+eps");
    c.check(!apply_outlier_filter(with(250.0 - eps, 300.0, 20.0), bamboo), "speaking rate 250-eps");
    c.check(apply_outlier_filter(with(200.0, 350.0 + eps, 20.0), bamboo) == ExclusionReason::ArticulationRate, "articulation rate 350+eps");
    c.check(!apply_outlier_filter(with(200.0, 350.0 - eps, 20.0), bamboo), "articulation rate 350-eps");
    c.check(apply_outlier_filter(with(200.0, 300.0, 80.0 + eps), bamboo) == ExclusionReason::Ppt, "ppt 80+eps");
    c.check(!apply_outlier_filter(with(200.0, 300.0, 80.0 - eps), bamboo), "ppt 80-eps");
    return "2 fixtures, 6 boundary cases";
}

std::string ddk(Criterion& c) {
    synth::DdkTrainSpec spec;
    spec.seed = 1;
    const auto t = synth::ddk_train(spec);
    const auto seg = detect_speech(t.clip);
    const auto onsets = detect_syllable_onsets(t.clip, seg);
    const auto m = ddk_metrics(onsets, seg);
    c.check(onsets.size() == 15, "onsets " + std::to_string(onsets.size()) + "/15");
    c.check(std::abs(m.syllable_rate - 5.0) <= 0.1, "rate " + fmt(m.syllable_rate));
    std::string ctvs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        synth::DdkTrainSpec jittered;
        jittered.ctv = 0.02;
        jittered.seed = seed;
        const auto j = synth::ddk_train(jittered);
        const auto jseg = detect_speech(j.clip);
        const auto jm = ddk_metrics(detect_syllable_onsets(j.clip, jseg), jseg);
        const double ctv = jm.ctv.value_or(NAN);
        c.check(ctv >= 0.7 * 0.02 && ctv <= 1.3 * 0.02, "seed " + std::to_string(seed) + " ctv " + fmt(ctv));
        ctvs += (ctvs.empty() ? "" : " ") + fmt(ctv);
    }
    return "rate " + fmt(m.syllable_rate) + ", ctv " + ctvs;
}

std::string facial(Criterion& c) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> scale(0.3, 4.0), shift(-500.0, 500.0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        synth::FaceMotionSpec spec;
        spec.seed = seed;
        spec.jaw_phase = 0.3;
        spec.jaw_amplitude = 5.0 + static_cast<double>(seed);
        auto track = synth::face_motion(spec);
        const auto a = facial_metrics(track);
        const double k = scale(rng), dx = shift(rng), dy = shift(rng);
        for (auto& f : track.frames) {
            for (auto& p : f) p = {k * p.x + dx, k * p.y + dy};
        }
        const auto b = facial_metrics(track);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const double d = std::abs(a.values[i].second - b.values[i].second);
            worst = std::max(worst, d);
            c.check(d <= 1e-9, a.values[i].first + " differs by " + fmt(d));
        }
    }
    const std::vector<Point> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    c.check(polygon_area(square) == 1.0, "unit square area " + fmt(polygon_area(square)));
    std::vector<double> quad(40);
    for (std::size_t k = 0; k < quad.size(); ++k) quad[k] = 0.5 * static_cast<double>(k * k) - 3.0 * static_cast<double>(k) + 2.0;
    const auto d = derivatives(quad);
    c.check(!d.jerk.empty() && std::all_of(d.jerk.begin(), d.jerk.end(), [](double j) { return j == 0.0; }), "quadratic jerk nonzero");
    synth::FaceMotionSpec blinks;
    blinks.seed = 1;
    blinks.blinks = 2;
    const double rate = blink_rate(synth::face_motion(blinks));
    c.check(rate == 0.2, "blink rate " + fmt(rate));
    return "max invariance error " + fmt(worst);
}

std::string statistics(Criterion& c) {
    const std::vector<std::vector<double>> g = {{1, 2, 3}, {4, 5, 6}};
    const auto kw = kruskal_wallis(g);
    c.check(std::abs(kw.h - 3.857) <= 1e-3, "H " + fmt(kw.h));
    c.check(std::abs(kw.p - 0.0495) <= 1e-3, "p " + fmt(kw.p));
    const double delta = glass_delta(std::vector<double>{2, 4, 6}, std::vector<double>{1, 2, 3}).delta;
    c.check(delta == 2.0, "Glass delta " + fmt(delta));

    std::mt19937_64 rng(8);
    std::lognormal_distribution<double> v(3.0, 1.0);
    MetricTable t;
    for (int i = 0; i < 40; ++i) {
        const Sex sex = i % 3 == 0 ? Sex::Male : Sex::Female;
        for (const char* m : {"a", "b", "c"}) t.rows.push_back({"S" + std::to_string(i), Cohort::CON, sex, m, v(rng) * 1000.0});
    }
    const auto z = zscore_by_sex(t);
    double worst = 0.0;
    for (const char* m : {"a", "b", "c"}) {
        for (Sex sex : {Sex::Female, Sex::Male}) {
            std::vector<double> vals;
            for (const auto& r : z.table.rows) {
                if (r.metric == m && r.sex == sex) vals.push_back(r.value);
            }
            const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / static_cast<double>(vals.size());
            double ss = 0.0;
            for (double x : vals) ss += (x - mean) * (x - mean);
            const double sd = std::sqrt(ss / static_cast<double>(vals.size() - 1));
            worst = std::max({worst, std::abs(mean), std::abs(sd - 1.0)});
        }
    }
    c.check(worst <= 1e-12, "z-score moment error " + fmt(worst));

    std::normal_distribution<double> n(0.0, 1.0);
    int invariant = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<double>> groups(2 + rng() % 3);
        for (auto& grp : groups) {
            grp.resize(3 + rng() % 8);
            for (double& x : grp) x = n(rng);
        }
        auto transformed = groups;
        for (auto& grp : transformed)
            for (double& x : grp) x = std::exp(3.0 * x) + 7.0;
        const auto a = kruskal_wallis(groups);
        const auto b = kruskal_wallis(transformed);
        invariant += a.h == b.h && a.p == b.p ? 1 : 0;
    }
    c.check(invariant == 100, "monotone invariance " + std::to_string(invariant) + "/100");
    return "H " + fmt(kw.h) + ", p " + fmt(kw.p) + ", monotone invariance 100/100";
}

std::string lars(Criterion& c) {
    const auto names_for = [](Eigen::Index p) {
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
        return names;
    };
    std::mt19937_64 rng(11);
    double worst = 0.0;
    int knots = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index p = 2 + static_cast<Eigen::Index>(rng() % 9);
        const Eigen::Index n = p + 2 + static_cast<Eigen::Index>(rng() % (29 - p));
        const Eigen::MatrixXd x = oracle::standardized(oracle::gaussian(n, p, rng));
        const Eigen::VectorXd beta = oracle::gaussian(p, 1, rng);
        Eigen::VectorXd y = x * beta + oracle::gaussian(n, 1, rng);
        y.array() -= y.mean();
        const auto path = lars_lasso_path(x, y, names_for(p));
        c.check(!path.steps.empty(), "empty path");
        double prev = 0.0;
        for (const auto& s : path.steps) {
            c.check(s.r2 >= prev - 1e-12, "R^2 decreased at trial " + std::to_string(trial));
            prev = s.r2;
            if (s.lambda <= 0.0) continue;
            const double d = (s.coefficients - oracle::cd_lasso(x, y, s.lambda)).cwiseAbs().maxCoeff();
            worst = std::max(worst, d);
            ++knots;
            c.check(d <= 1e-6, "knot differs by " + fmt(d));
        }
    }
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 20, p = 6;
        Eigen::MatrixXd raw = oracle::gaussian(n, p, rng);
        raw.rowwise() -= raw.colwise().mean();
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(raw).householderQ() * Eigen::MatrixXd::Identity(n, p);
        Eigen::VectorXd y = oracle::gaussian(n, 1, rng);
        y.array() -= y.mean();
        const Eigen::VectorXd corr = q.transpose() * y;
        std::vector<Eigen::Index> expected(p);
        std::iota(expected.begin(), expected.end(), 0);
        std::sort(expected.begin(), expected.end(), [&](Eigen::Index a, Eigen::Index b) { return std::abs(corr(a)) > std::abs(corr(b)); });
        const auto names = names_for(p);
        const auto entries = lars_lasso_path(q, y, names).entries();
        bool same = entries.size() == static_cast<std::size_t>(p);
        for (std::size_t k = 0; same && k < entries.size(); ++k) same = entries[k].first == names[static_cast<std::size_t>(expected[k])];
        c.check(same, "orthonormal entry order differs at trial " + std::to_string(trial));
    }
    return std::to_string(knots) + " knots, max deviation " + fmt(worst);
}

struct E2E {
    bool ran = false;
    std::string error;
    double seconds = 0.0;
    fs::path data, extract, analyze;
};

int run(const std::string& command) { return std::system((command + " > /dev/null 2>&1").c_str()); }

std::string shell_quoted(const fs::path& p) { return "'" + p.string() + "'"; }

E2E run_pipeline(const std::string& cli, const fs::path& root, std::uint64_t seed) {
    E2E e;
    e.data = root / "data";
    e.extract = root / "extract";
    e.analyze = root / "analyze";
    const auto t0 = Clock::now();
    const std::string s = std::to_string(seed);
    if (run(shell_quoted(cli) + " synth cohort-separation -o " + shell_quoted(e.data) + " --seed " + s) != 0) {
        e.error = "synth failed";
    } else if (run(shell_quoted(cli) + " extract " + shell_quoted(e.data) + " -o " + shell_quoted(e.extract)) != 0) {
        e.error = "extract failed";
    } else if (run(shell_quoted(cli) + " analyze --metrics " + shell_quoted(e.extract / "metrics.csv") + " --subjects " +
                   shell_quoted(e.extract / "subjects.json") + " -o " + shell_quoted(e.analyze) + " --seed " + s) != 0) {
        e.error = "analyze failed";
    }
    e.seconds = seconds_since(t0);
    e.ran = e.error.empty();
    return e;
}

std::string classification(Criterion& c, const std::string& cli, const E2E& e2e, const fs::path& root) {
    const auto cohorts = [](double shift, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        Eigen::MatrixXd x = oracle::gaussian(40, 6, rng);
        Eigen::VectorXd y = Eigen::VectorXd::Zero(40);
        for (int i = 20; i < 40; ++i) {
            y(i) = 1.0;
            x.row(i).head(3).array() += shift;
        }
        return std::pair{x, y};
    };
    const std::vector<std::string> names{"m0", "m1", "m2", "m3", "m4", "m5"};
    const auto [sx, sy] = cohorts(8.0, 3);
    CvOptions opt;
    opt.seed = 1;
    const auto sep = crossvalidate(sx, sy, names, opt);
    c.check(sep.uar_mean == 1.0, "separable UAR " + fmt(sep.uar_mean));
    c.check(sep.roc.auc == 1.0, "separable AUC " + fmt(sep.roc.auc));

    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto [x, y] = cohorts(1.0, 100 + seed);
        std::mt19937_64 rng(seed);
        std::vector<double> labels(y.data(), y.data() + y.size());
        std::shuffle(labels.begin(), labels.end(), rng);
        y = Eigen::Map<Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
        CvOptions o;
        o.seed = seed;
        sum += crossvalidate(x, y, names, o).uar_mean;
    }
    const double null_uar = sum / 20.0;
    c.check(std::abs(null_uar - 0.5) <= 0.1, "permuted-label mean UAR " + fmt(null_uar));

    if (!e2e.ran) {
        c.check(false, "no pipeline output for the determinism check: " + e2e.error);
    } else {
        const fs::path again = root / "analyze_again";
        const int rc = run(shell_quoted(cli) + " analyze --metrics " + shell_quoted(e2e.extract / "metrics.csv") + " --subjects " +
                           shell_quoted(e2e.extract / "subjects.json") + " -o " + shell_quoted(again) + " --seed 1");
        const std::string a = read_file(e2e.analyze / "cv_report.json");
        const std::string b = read_file(again / "cv_report.json");
        c.check(rc == 0 && !a.empty() && a == b, "cv_report.json differs between identical runs");
    }
    return "null UAR " + fmt(null_uar) + ", cv_report.json identical across runs";
}

std::string end_to_end(Criterion& c, const E2E& e2e) {
    if (!e2e.ran) {
        c.check(false, e2e.error);
        return "";
    }
    const json truth = json::parse(read_file(e2e.data / "ground_truth.json"));
    std::map<std::pair<std::string, std::string>, std::pair<double, double>> effects;  // (metric, pair) -> (delta, p)
    const auto rows = read_csv(e2e.analyze / "effects.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() == 6) effects[{rows[i][0], rows[i][1]}] = {std::stod(rows[i][2]), std::stod(rows[i][5])};
    }
    std::string summary;
    for (const auto& planted : truth["planted_differences"]) {
        const std::string metric = planted["metric"], pair = planted["pair"];
        const int direction = planted["direction"];
        const auto it = effects.find({metric, pair});
        if (it == effects.end()) {
            c.check(false, metric + " " + pair + " not reported");
            continue;
        }
        const auto [delta, p] = it->second;
        c.check(p < 0.05, metric + " p " + fmt(p));
        c.check(direction * delta >= 0.8, metric + " delta " + fmt(delta));
        summary += metric + " delta " + fmt(delta) + ", ";
    }

    const json lars = json::parse(read_file(e2e.analyze / "lars_path.json"));
    const auto planted = truth["severity"]["features"].get<std::vector<std::string>>();
    const std::set<std::string> expected(planted.begin(), planted.end());
    int analyses = 0;
    for (const auto& a : lars["analyses"]) {
        const std::string cohort = a["cohort"];
        ++analyses;
        const auto& entries = a["entries"];
        if (entries.size() < 3) {
            c.check(false, cohort + ": fewer than 3 entries");
            continue;
        }
        std::set<std::string> first;
        for (std::size_t k = 0; k < 3; ++k) first.insert(entries[k]["feature"].get<std::string>());
        c.check(first == expected, cohort + ": first entries are not the planted features");
        const double r2 = entries[2]["cumulative_r2"];
        c.check(r2 > 0.9, cohort + " cumulative R^2 " + fmt(r2));
        summary += cohort + " R^2 " + fmt(r2) + ", ";
    }
    c.check(analyses == 2, "expected PRE and BUL severity analyses, got " + std::to_string(analyses));
    c.check(e2e.seconds < 120.0, "runtime " + fmt(e2e.seconds) + " s");
    return summary + "runtime " + fmt(e2e.seconds) + " s";
}

std::string coverage(Criterion& c, const E2E& e2e) {
    std::set<std::string> schema;
    for (const auto& task : {TaskKind::held_vowel(), TaskKind::sit(1), TaskKind::bamboo(), TaskKind::ddk(),
                             TaskKind::picture_description()}) {
        for (const auto& m : acoustic_metrics_for(task)) schema.insert(m);
    }
    for (const auto& m : facial_metric_names()) schema.insert(m);
    std::set<std::string> emitted;
    if (e2e.ran) {
        for (const auto& r : read_metrics_csv(e2e.extract / "metrics.csv")) emitted.insert(r.metric);
    } else {
        c.check(false, "no metrics.csv to inspect: " + e2e.error);
    }
    const auto names = table_metric_names();
    for (const auto& n : names) {
        c.check(schema.count(n) == 1, n + " missing from the extract schema");
        if (e2e.ran) c.check(emitted.count(n) == 1, n + " missing from metrics.csv");
    }
    return std::to_string(names.size()) + " table metrics present";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: speechbio_acceptance <path to speechbio>\n";
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path root = fs::temp_directory_path() / "speechbio_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    int failed = 0;
    const auto report = [&](const std::string& name, auto&& body) {
        Criterion c;
        std::string detail;
        try {
            detail = body(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        failed += c.passed() ? 0 : 1;
        std::cout << (c.passed() ? "PASS " : "FAIL ") << name << ": " << (c.passed() ? detail : c.failures()) << std::endl;
    };

    report("voice-quality", voice_quality);
    report("timing", timing_arithmetic);
    report("ddk", ddk);
    report("facial", facial);
    report("statistics", statistics);
    report("lars", lars);

    const E2E e2e = run_pipeline(cli, root, 1);
    report("classification", [&](Criterion& c) { return classification(c, cli, e2e, root); });
    report("end-to-end", [&](Criterion& c) { return end_to_end(c, e2e); });
    report("coverage", [&](Criterion& c) { return coverage(c, e2e); });

    fs::remove_all(root);
    return failed == 0 ? 0 : 1;
}
