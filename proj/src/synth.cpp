#include "speechbio/synth.hpp"

#include "speechbio/error.hpp"
#include "speechbio/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

namespace speechbio::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double random_sign(std::mt19937_64& rng) { return (rng() & 1U) != 0U ? 1.0 : -1.0; }

void add_noise(std::vector<double>& x, double rms, std::mt19937_64& rng) {
    if (rms <= 0.0) return;
    std::normal_distribution<double> n(0.0, rms);
    for (double& v : x) v += n(rng);
}

/// Sum of the first five harmonics with 1/k amplitudes, peak-normalized over one period.
double harmonic(double phase) {
    double s = 0.0;
    for (int k = 1; k <= 5; ++k) s += std::sin(k * phase) / k;
    return s / 1.2;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace

PulseTrain pulse_train(const PulseTrainSpec& spec) {
    if (!(spec.f0 > 0.0) || !(spec.duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "pulse train needs f0 and duration");
    std::mt19937_64 rng(spec.seed);
    const double t0 = 1.0 / spec.f0;
    const double sigma = 0.1 * t0;
    const auto fs_ = static_cast<double>(spec.sample_rate);
    std::vector<double> x(static_cast<std::size_t>(std::round(spec.duration * fs_)), 0.0);
    PulseTrain out{AudioClip({0.0}, spec.sample_rate), {}, {}};
    double t = 0.5 * t0;
    for (int i = 0; t < spec.duration - 0.5 * t0; ++i) {
        double amp = spec.amplitude * (1.0 + spec.shimmer * random_sign(rng));
        if (spec.alternate != 0.0 && i % 2 == 1) amp = spec.amplitude * spec.alternate;
        const double period = t0 * (1.0 + spec.jitter * random_sign(rng));
        const auto lo = static_cast<long>(std::floor((t - 5.0 * sigma) * fs_));
        const auto hi = static_cast<long>(std::ceil((t + 5.0 * sigma) * fs_));
        for (long k = std::max(0L, lo); k <= hi && k < static_cast<long>(x.size()); ++k) {
            const double d = static_cast<double>(k) / fs_ - t;
            x[static_cast<std::size_t>(k)] += amp * std::exp(-0.5 * d * d / (sigma * sigma));
        }
        out.amplitudes.push_back(amp);
        out.periods.push_back(period);
        t += period;
    }
    out.periods.pop_back();  // the last pulse has no successor
    add_noise(x, spec.noise_rms, rng);
    out.clip = AudioClip(std::move(x), spec.sample_rate);
    return out;
}

DdkTrain ddk_train(const DdkTrainSpec& spec) {
    if (spec.count < 1 || !(spec.rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "DDK train needs count and rate");
    std::mt19937_64 rng(spec.seed);
    const double base = 1.0 / spec.rate;
    std::vector<double> intervals(static_cast<std::size_t>(spec.count - 1), base);
    if (spec.ctv > 0.0 && intervals.size() >= 2) {
        std::normal_distribution<double> n;
        std::vector<double> e(intervals.size());
        for (double& v : e) v = n(rng);
        const double mean = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
        double ss = 0.0;
        for (double v : e) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(e.size() - 1));
        for (std::size_t i = 0; i < e.size(); ++i) intervals[i] += spec.ctv * (e[i] - mean) / sd;
    }
    DdkTrain out{AudioClip({0.0}, spec.sample_rate), {}, 0.0};
    std::vector<double> lengths = intervals;
    lengths.push_back(base);
    double t = spec.lead;
    for (double len : lengths) {
        out.onsets.push_back(t);
        t += len;
        out.articulation += len;
    }
    const auto fs_ = static_cast<double>(spec.sample_rate);
    std::vector<double> x(static_cast<std::size_t>(std::round((t + spec.tail) * fs_)), 0.0);
    constexpr double attack = 0.015, decay = 0.035;
    for (std::size_t s = 0; s < lengths.size(); ++s) {
        const auto begin = static_cast<std::size_t>(std::round(out.onsets[s] * fs_));
        const auto end = static_cast<std::size_t>(std::round((out.onsets[s] + lengths[s]) * fs_));
        for (std::size_t k = begin; k < end && k < x.size(); ++k) {
            const double u = static_cast<double>(k - begin) / fs_;
            const double env = u < attack ? u / attack : std::exp(-(u - attack) / decay);
            x[k] = spec.amplitude * env * harmonic(kTwoPi * spec.carrier_f0 * static_cast<double>(k) / fs_);
        }
    }
    out.clip = AudioClip(std::move(x), spec.sample_rate);
    return out;
}

Reading reading(const ReadingSpec& spec) {
    if (spec.words < 1 || !(spec.articulation_rate > 0.0) || spec.ppt < 0.0 || spec.ppt >= 100.0) {
        throw Error(ErrorCode::InvalidArgument, "invalid reading parameters");
    }
    std::mt19937_64 rng(spec.seed);
    const double articulation = 60.0 * spec.words / spec.articulation_rate;
    const double pause_total = articulation * spec.ppt / (100.0 - spec.ppt);
    int pauses = 0;
    if (pause_total > 0.0) {
        pauses = std::clamp(static_cast<int>(std::floor(pause_total / spec.min_pause)), 1, std::max(1, spec.words - 1));
    }
    std::uniform_real_distribution<double> weight(0.7, 1.3);
    std::vector<double> chunks(static_cast<std::size_t>(pauses + 1));
    for (double& c : chunks) c = weight(rng);
    const double wsum = std::accumulate(chunks.begin(), chunks.end(), 0.0);
    for (double& c : chunks) c *= articulation / wsum;

    Reading out{AudioClip({0.0}, spec.sample_rate), {}};
    double t = spec.lead;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        out.segments.push_back({t, t + chunks[i]});
        t += chunks[i] + (pauses > 0 ? pause_total / pauses : 0.0);
    }
    const double end = out.segments.back().end + spec.tail;
    const auto fs_ = static_cast<double>(spec.sample_rate);
    std::vector<double> x(static_cast<std::size_t>(std::round(end * fs_)), 0.0);
    constexpr double ramp = 0.01;
    for (const auto& seg : out.segments) {
        const auto begin = static_cast<std::size_t>(std::round(seg.start * fs_));
        const auto stop = static_cast<std::size_t>(std::round(seg.end * fs_));
        for (std::size_t k = begin; k < stop && k < x.size(); ++k) {
            const double u = static_cast<double>(k) / fs_;
            const double edge = std::min({1.0, (u - seg.start) / ramp, (seg.end - u) / ramp});
            const double am = 1.0 - 0.2 * (1.0 + std::sin(kTwoPi * 4.0 * u));
            x[k] = spec.amplitude * edge * am * harmonic(kTwoPi * spec.f0 * u);
        }
    }
    out.clip = AudioClip(std::move(x), spec.sample_rate);
    return out;
}

FaceFrame face(const FaceSpec& spec, double jaw, bool eyes_closed) {
    std::array<Point, kLandmarkCount> p{};  // unit-ILD coordinates, image axes (y down)
    const double j = jaw / spec.ild;
    for (std::size_t k = 0; k <= 16; ++k) {
        const double th = std::numbers::pi * (1.0 - static_cast<double>(k) / 16.0);
        const double w = std::max(0.0, std::sin(th));  // jaw points follow the chin by height
        p[k] = {1.9 * std::cos(th), -0.5 + 2.5 * std::sin(th) + j * w * w};
    }
    for (std::size_t k = 0; k < 5; ++k) {
        const double u = static_cast<double>(k) / 4.0;
        const double arch = 0.15 * std::sin(std::numbers::pi * u);
        p[17 + k] = {-1.5 + 1.1 * u, -spec.brow_height - arch};
        p[22 + k] = {0.4 + 1.1 * u, -spec.brow_height - arch};
    }
    for (std::size_t k = 0; k < 4; ++k) p[27 + k] = {0.0, -0.6 + 0.2 * static_cast<double>(k)};
    for (std::size_t k = 0; k < 5; ++k) p[31 + k] = {-0.3 + 0.15 * static_cast<double>(k), 0.15 + 0.05 * (k == 2 ? 1.0 : 0.0)};
    const double h = eyes_closed ? 0.02 : spec.eye_half_height;
    const double ey = -0.6;
    p[36] = {-1.4, ey};
    p[37] = {-1.17, ey - h};
    p[38] = {-0.73, ey - h};
    p[39] = {-0.5, ey};
    p[40] = {-0.73, ey + h};
    p[41] = {-1.17, ey + h};
    p[42] = {0.5, ey};
    p[43] = {0.73, ey - h};
    p[44] = {1.17, ey - h};
    p[45] = {1.4, ey};
    p[46] = {1.17, ey + h};
    p[47] = {0.73, ey + h};
    const double my = 1.0, mw = spec.mouth_half_width;
    for (std::size_t k = 0; k < 12; ++k) {
        const double phi = std::numbers::pi + static_cast<double>(k) * std::numbers::pi / 6.0;
        const double s = std::sin(phi);
        const double lower = s > 0.0 ? 0.6 * j * s : 0.0;
        p[48 + k] = {mw * std::cos(phi), my + (s < 0.0 ? 0.25 : 0.3) * s + lower};
    }
    for (std::size_t k = 0; k < 8; ++k) {
        const double phi = std::numbers::pi + static_cast<double>(k) * std::numbers::pi / 4.0;
        const double s = std::sin(phi);
        const double lower = s > 0.0 ? 0.6 * j * s : 0.0;
        p[60 + k] = {0.6 * mw * std::cos(phi), my + (s < 0.0 ? 0.05 : 0.12) * s + lower};
    }
    FaceFrame f{};
    for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        f[k] = {spec.center.x + spec.ild * p[k].x, spec.center.y + spec.ild * p[k].y};
    }
    return f;
}

LandmarkTrack face_motion(const FaceMotionSpec& spec) {
    if (!(spec.fps > 0.0) || !(spec.duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "face motion needs fps and duration");
    std::mt19937_64 rng(spec.seed);
    const auto n = static_cast<std::size_t>(std::round(spec.duration * spec.fps));
    std::vector<bool> closed(n, false);
    if (spec.blinks > 0) {
        const double bin = static_cast<double>(n) / spec.blinks;
        const auto width = static_cast<std::size_t>(spec.blink_frames);
        for (int b = 0; b < spec.blinks; ++b) {
            const double room = bin - static_cast<double>(width) - 4.0;
            if (room < 0.0) throw Error(ErrorCode::InvalidArgument, "too many blinks for the track length");
            const double offset = 2.0 + std::uniform_real_distribution<double>(0.0, room)(rng);
            const auto start = static_cast<std::size_t>(b * bin + offset);
            for (std::size_t k = start; k < start + width && k < n; ++k) closed[k] = true;
        }
    }
    LandmarkTrack track;
    track.fps = spec.fps;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / spec.fps;
        const double jaw = spec.jaw_amplitude * std::sin(kTwoPi * spec.jaw_frequency * t + spec.jaw_phase);
        track.frames.push_back(face(spec.face, jaw, closed[i]));
        track.valid.push_back(true);
    }
    return track;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"vowel-jitter", "ddk-train", "landmark-motion", "cohort-separation"};
    return names;
}

namespace {

SubjectProfile control_subject(const std::string& id) {
    SubjectProfile s;
    s.subject_id = id;
    s.sex = Sex::Female;
    s.age = 60.0;
    s.is_control = true;
    return s;
}

json single_session(const fs::path& out_dir, const SubjectProfile& subject, std::vector<Utterance> utterances) {
    SessionManifest m;
    m.subject = subject;
    m.utterances = std::move(utterances);
    save_manifest(m, out_dir / "manifest.json");
    return json::array({"manifest.json"});
}

/// ALSFRS-R items whose first three sum to `bulbar` and all twelve to `total`.
std::vector<int> alsfrs_items(int bulbar, int total, std::mt19937_64& rng) {
    std::vector<int> items(12, 0);
    int left = bulbar;
    for (int i = 0; i < 3; ++i) {
        const int lo = std::max(0, left - 4 * (2 - i));
        const int hi = std::min(4, left);
        items[static_cast<std::size_t>(i)] = lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
        left -= items[static_cast<std::size_t>(i)];
    }
    left = total - bulbar;
    for (int i = 3; i < 12; ++i) {
        const int lo = std::max(0, left - 4 * (11 - i));
        const int hi = std::min(4, left);
        items[static_cast<std::size_t>(i)] = lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1));
        left -= items[static_cast<std::size_t>(i)];
    }
    return items;
}

json cohort_separation(const fs::path& out_dir, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform;
    const auto clamped = [&](double limit) { return std::clamp(normal(rng), -limit, limit); };

    // Planted group shift in control-sd units for BUL; PRE matches CON.
    constexpr double kShift = 1.3;
    constexpr double kPptMean = 22.0, kPptSd = 5.0;
    constexpr double kDdkRateMean = 5.5, kDdkRateSd = 0.5;
    constexpr double kJawMean = 8.0, kJawSd = 2.0;  // px at ILD 100
    constexpr double kCtvMean = 0.02, kCtvSd = 0.006;
    constexpr double kBlinkMean = 6.0, kBlinkSd = 2.0;
    constexpr double kSeverityWeight = 2.5;
    const double f0_mean[2] = {200.0, 120.0}, f0_sd[2] = {20.0, 12.0};

    struct Group {
        Cohort cohort;
        int size;
        double shift;
        double alsfrs_base;
    };
    // Large enough that chance correlations among ~70 metrics stay below the planted ones.
    constexpr int kCohortSize = 60;
    const Group groups[] = {{Cohort::CON, kCohortSize, 0.0, 0.0},
                            {Cohort::PRE, kCohortSize, 0.0, 33.0},
                            {Cohort::BUL, kCohortSize, kShift, 28.0}};

    const TaskTable tasks;
    json manifests = json::array();
    int index = 0;
    for (const Group& g : groups) {
        for (int s = 0; s < g.size; ++s, ++index) {
            char id[16];
            std::snprintf(id, sizeof id, "S%03d", index + 1);
            const fs::path dir = out_dir / id;
            fs::create_directories(dir);
            const auto sub_seed = seed * 1000003ULL + static_cast<std::uint64_t>(index);

            SubjectProfile subject;
            subject.subject_id = id;
            subject.sex = (rng() & 1U) != 0U ? Sex::Male : Sex::Female;
            subject.age = std::round(45.0 + 30.0 * uniform(rng));
            subject.is_control = g.cohort == Cohort::CON;
            const int sx = subject.sex == Sex::Male ? 1 : 0;

            const double z_f0 = clamped(2.0);
            const double z_ctv = clamped(2.0);
            const int blinks = static_cast<int>(std::clamp(std::round(kBlinkMean + kBlinkSd * normal(rng)), 2.0, 10.0));
            const double z_blink = (blinks - kBlinkMean) / kBlinkSd;
            const double f0 = f0_mean[sx] + f0_sd[sx] * z_f0;
            const double ctv = kCtvMean + kCtvSd * z_ctv;
            const double ppt = std::clamp(kPptMean + kPptSd * (normal(rng) + g.shift), 8.0, 45.0);
            const double ddk_rate = kDdkRateMean + kDdkRateSd * (normal(rng) - g.shift);
            const double jaw = std::max(1.0, kJawMean + kJawSd * (normal(rng) - g.shift));
            const double artic_rate = 200.0 + 15.0 * normal(rng);

            if (g.cohort != Cohort::CON) {
                const int total = static_cast<int>(std::lround(
                    g.alsfrs_base + kSeverityWeight * (z_f0 - z_ctv + z_blink)));
                const int bulbar = g.cohort == Cohort::PRE ? 12 : 7 + static_cast<int>(rng() % 5);
                subject.alsfrs = score_alsfrs(alsfrs_items(bulbar, total, rng));
            }

            std::vector<Utterance> utts;
            const auto add = [&](const std::string& name, TaskKind task, const AudioClip& clip) {
                write_wav(dir / (name + ".wav"), clip, WavEncoding::Float32);
                Utterance u;
                u.task = task;
                u.audio = dir / (name + ".wav");
                u.utterance_id = name;
                utts.push_back(u);
                return utts.size() - 1;
            };

            PulseTrainSpec vowel;
            vowel.f0 = f0;
            vowel.duration = 1.5;
            vowel.jitter = 0.003 + 0.004 * uniform(rng);
            vowel.shimmer = 0.02 + 0.03 * uniform(rng);
            vowel.noise_rms = 0.002 + 0.02 * uniform(rng);
            vowel.seed = sub_seed + 1;
            add("vowel", TaskKind::held_vowel(), pulse_train(vowel).clip);

            FaceSpec face_spec;
            face_spec.ild = 80.0 + 40.0 * uniform(rng);
            face_spec.center = {300.0 + 40.0 * uniform(rng), 220.0 + 40.0 * uniform(rng)};
            face_spec.eye_half_height = 0.135 * (1.0 + 0.1 * clamped(2.5));
            face_spec.mouth_half_width = 0.8 * (1.0 + 0.08 * clamped(2.5));
            face_spec.brow_height = 1.0 + 0.08 * clamped(2.5);

            for (int k : {5, 6}) {
                ReadingSpec r;
                r.words = tasks.sit_words[static_cast<std::size_t>(k - 1)];
                r.articulation_rate = artic_rate;
                r.ppt = ppt;
                r.f0 = f0;
                r.seed = sub_seed + 10 + static_cast<std::uint64_t>(k);
                const std::string name = "sit" + std::to_string(k);
                const auto u = add(name, TaskKind::sit(k), reading(r).clip);

                FaceMotionSpec m;
                m.face = face_spec;
                m.jaw_amplitude = jaw * face_spec.ild / 100.0;
                m.jaw_phase = kTwoPi * uniform(rng);
                m.blinks = blinks;
                m.seed = sub_seed + 20 + static_cast<std::uint64_t>(k);
                const fs::path csv = dir / (name + "_landmarks.csv");
                write_landmark_csv(csv, face_motion(m));
                utts[u].landmarks = csv;
            }

            ReadingSpec bamboo;
            bamboo.words = tasks.bamboo_words;
            bamboo.articulation_rate = artic_rate;
            bamboo.ppt = ppt;
            bamboo.f0 = f0;
            bamboo.seed = sub_seed + 30;
            add("bamboo", TaskKind::bamboo(), reading(bamboo).clip);

            DdkTrainSpec ddk;
            ddk.rate = ddk_rate;
            ddk.count = 15;
            ddk.ctv = ctv;
            ddk.carrier_f0 = f0;
            ddk.seed = sub_seed + 40;
            add("ddk", TaskKind::ddk(), ddk_train(ddk).clip);

            SessionManifest m;
            m.subject = subject;
            m.utterances = std::move(utts);
            save_manifest(m, dir / "manifest.json");
            manifests.push_back(std::string(id) + "/manifest.json");
        }
    }

    json truth;
    truth["scenario"] = "cohort-separation";
    truth["seed"] = seed;
    truth["manifests"] = manifests;
    truth["cohort_sizes"] = {{"CON", kCohortSize}, {"PRE", kCohortSize}, {"BUL", kCohortSize}};
    truth["planted_differences"] = json::array({
        {{"metric", "ppt"}, {"pair", "BUL-CON"}, {"direction", 1}, {"delta", kShift}},
        {{"metric", "syllable_rate"}, {"pair", "BUL-CON"}, {"direction", -1}, {"delta", -kShift}},
        {{"metric", "JC_path"}, {"pair", "BUL-CON"}, {"direction", -1}, {"delta", -kShift}},
    });
    truth["severity"] = {
        {"target", "alsfrs_total"},
        {"features", {"mean_f0", "ctv", "eye_blinks"}},
        {"signs", {1, -1, 1}},
        {"weight_per_sd", kSeverityWeight},
        {"intercept", {{"PRE", 33.0}, {"BUL", 28.0}}},
    };
    return truth;
}

}  // namespace

json synthesize(const std::string& scenario, const fs::path& out_dir, std::uint64_t seed, const Options& options) {
    if (std::find(scenario_names().begin(), scenario_names().end(), scenario) == scenario_names().end()) {
        throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + scenario + "'");
    }
    fs::create_directories(out_dir);
    json truth;
    if (scenario == "vowel-jitter") {
        PulseTrainSpec spec;
        spec.f0 = options.f0;
        spec.jitter = options.jitter;
        spec.shimmer = options.shimmer;
        spec.duration = 2.0;
        spec.seed = seed;
        const auto train = pulse_train(spec);
        write_wav(out_dir / "vowel.wav", train.clip, WavEncoding::Float32);
        Utterance u{TaskKind::held_vowel(), out_dir / "vowel.wav", std::nullopt, std::nullopt, "vowel"};
        truth["manifests"] = single_session(out_dir, control_subject("SYN001"), {u});
        truth["f0"] = options.f0;
        truth["jitter_percent"] = 100.0 * options.jitter;
        truth["shimmer_percent"] = 100.0 * options.shimmer;
    } else if (scenario == "ddk-train") {
        DdkTrainSpec spec;
        spec.rate = options.rate;
        spec.count = options.count;
        spec.ctv = options.ctv;
        spec.seed = seed;
        const auto train = ddk_train(spec);
        write_wav(out_dir / "ddk.wav", train.clip, WavEncoding::Float32);
        Utterance u{TaskKind::ddk(), out_dir / "ddk.wav", std::nullopt, std::nullopt, "ddk"};
        truth["manifests"] = single_session(out_dir, control_subject("SYN001"), {u});
        truth["onsets"] = train.onsets;
        truth["syllable_count"] = options.count;
        truth["syllable_rate"] = options.count / train.articulation;
        truth["ctv"] = options.ctv;
    } else if (scenario == "landmark-motion") {
        FaceMotionSpec spec;
        spec.jaw_amplitude = options.jaw_amplitude;
        spec.blinks = options.blinks;
        spec.seed = seed;
        write_landmark_csv(out_dir / "face.csv", face_motion(spec));
        ReadingSpec r;
        r.words = 15;
        r.seed = seed;
        write_wav(out_dir / "sit6.wav", reading(r).clip, WavEncoding::Float32);
        Utterance u{TaskKind::sit(6), out_dir / "sit6.wav", out_dir / "face.csv", std::nullopt, "sit6"};
        truth["manifests"] = single_session(out_dir, control_subject("SYN001"), {u});
        truth["fps"] = spec.fps;
        truth["duration"] = spec.duration;
        truth["ild"] = spec.face.ild;
        truth["jaw_amplitude_px"] = spec.jaw_amplitude;
        truth["jaw_frequency"] = spec.jaw_frequency;
        truth["eye_blinks"] = spec.blinks / spec.duration;
    } else {
        truth = cohort_separation(out_dir, seed);
    }
    truth["scenario"] = scenario;
    truth["seed"] = seed;
    write_json(out_dir / "ground_truth.json", truth);
    return truth;
}

}  // namespace speechbio::synth
