#include "speechbio/error.hpp"
#include "speechbio/session.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace speechbio;

namespace {

std::array<int, 12> all(int v) {
    std::array<int, 12> a{};
    a.fill(v);
    return a;
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return ErrorCode::InvalidArgument;
}

SubjectProfile patient(std::array<int, 12> items, std::string id = "P1") {
    SubjectProfile p;
    p.subject_id = std::move(id);
    p.sex = Sex::Male;
    p.age = 61.0;
    p.alsfrs = score_alsfrs(items);
    return p;
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("speechbio_session_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("task kinds") {
    CHECK(TaskKind::parse("sit3") == TaskKind::sit(3));
    CHECK(TaskKind::parse("sit3").type_name() == "sit");
    CHECK(TaskKind::parse("bamboo").is_reading());
    CHECK_FALSE(TaskKind::parse("ddk").is_reading());
    CHECK_THROWS_AS(TaskKind::sit(0), Error);
    CHECK_THROWS_AS(TaskKind::sit(7), Error);
    CHECK_THROWS_AS(TaskKind::parse("sit7"), Error);
    for (const char* t : {"vowel", "sit1", "sit6", "bamboo", "ddk", "picture"}) CHECK(TaskKind::parse(t).to_string() == t);

    const TaskTable table;
    CHECK(table.expected_words(TaskKind::bamboo()) == 99);
    CHECK(table.expected_words(TaskKind::sit(1)) == 5);
    CHECK(table.expected_words(TaskKind::sit(6)) == 15);
    CHECK_FALSE(table.expected_words(TaskKind::ddk()).has_value());
    CHECK_FALSE(table.expected_words(TaskKind::held_vowel()).has_value());
}

TEST_CASE("ALSFRS-R scoring") {
    const auto full = score_alsfrs(all(4));
    CHECK(full.total == 48);
    CHECK(full.bulbar_subscore == 12);
    const auto zero = score_alsfrs(all(0));
    CHECK(zero.total == 0);
    CHECK(zero.bulbar_subscore == 0);
    auto items = all(4);
    items[0] = 3;
    const auto one_down = score_alsfrs(items);
    CHECK(one_down.total == 47);
    CHECK(one_down.bulbar_subscore == 11);

    items[5] = 5;
    CHECK(code_of([&] { score_alsfrs(items); }) == ErrorCode::ItemOutOfRange);
    items[5] = -1;
    CHECK(code_of([&] { score_alsfrs(items); }) == ErrorCode::ItemOutOfRange);
    const std::vector<int> eleven(11, 4);
    CHECK(code_of([&] { score_alsfrs(eleven); }) == ErrorCode::WrongItemCount);
}

TEST_CASE("ALSFRS-R score ranges over random questionnaires") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> item(0, 4);
    for (int trial = 0; trial < 500; ++trial) {
        std::array<int, 12> a{};
        for (int& v : a) v = item(rng);
        const auto s = score_alsfrs(a);
        int sum = 0;
        for (int v : a) sum += v;
        CHECK(s.total == sum);
        CHECK(s.bulbar_subscore == a[0] + a[1] + a[2]);
        CHECK(s.bulbar_subscore >= 0);
        CHECK(s.bulbar_subscore <= 12);
        CHECK(s.total - s.bulbar_subscore >= 0);
        CHECK(s.total - s.bulbar_subscore <= 36);
    }
}

TEST_CASE("stratification") {
    auto bul = all(4);
    bul[0] = 3;
    CHECK(stratify(patient(bul)) == Cohort::BUL);
    CHECK(stratify(patient(all(4))) == Cohort::PRE);

    auto control = patient(all(0));
    control.is_control = true;
    CHECK(stratify(control) == Cohort::CON);
    control.alsfrs.reset();
    CHECK(stratify(control) == Cohort::CON);

    auto missing = patient(all(4));
    missing.alsfrs.reset();
    CHECK(code_of([&] { stratify(missing); }) == ErrorCode::MissingAlsfrs);

    // Depends only on the control flag and the bulbar items.
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> item(0, 4);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<int, 12> a{};
        for (int& v : a) v = item(rng);
        auto p = patient(a);
        const Cohort c = stratify(p);
        CHECK(c == (p.alsfrs->bulbar_subscore < 12 ? Cohort::BUL : Cohort::PRE));
        for (std::size_t i = 3; i < 12; ++i) a[i] = item(rng);
        p.alsfrs = score_alsfrs(a);
        CHECK(stratify(p) == c);
        CHECK(p.cohort() == c);
    }
}

TEST_CASE("manifest JSON round trip") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        SessionManifest m;
        m.subject = patient(all(static_cast<int>(rng() % 5)), "S" + std::to_string(trial));
        m.subject.is_control = rng() % 2 == 0;
        if (m.subject.is_control && rng() % 2 == 0) m.subject.alsfrs.reset();
        m.subject.sex = rng() % 2 == 0 ? Sex::Female : Sex::Male;
        m.subject.age = 40.0 + static_cast<double>(rng() % 400) / 10.0;
        m.tasks.sit_words = {6, 7, 8, 9, 10, 11};
        m.tasks.bamboo_words = 99;
        m.utterances.push_back({TaskKind::held_vowel(), "/data/v.wav", std::nullopt, std::nullopt, "u0"});
        const int sits = static_cast<int>(rng() % 7);
        for (int s = 1; s <= sits; ++s) {
            m.utterances.push_back({TaskKind::sit(s), "/data/s" + std::to_string(s) + ".wav",
                                    std::filesystem::path("/data/s" + std::to_string(s) + ".csv"),
                                    rng() % 2 == 0 ? std::optional<double>(30.0) : std::nullopt,
                                    "sit" + std::to_string(s)});
        }
        if (rng() % 2 == 0) m.utterances.push_back({TaskKind::ddk(), "/data/d.wav", std::nullopt, std::nullopt, "d"});

        const auto j = manifest_to_json(m);
        CHECK(manifest_from_json(j) == m);
        CHECK(manifest_from_json(nlohmann::json::parse(j.dump())) == m);
    }
}

TEST_CASE("manifest validation") {
    const auto dir = scratch("validation");
    std::ofstream(dir / "v.wav") << "x";
    std::ofstream(dir / "b.wav") << "x";

    nlohmann::json j = {
        {"subject", {{"id", "S1"}, {"sex", "female"}, {"age", 50}, {"is_control", true}}},
        {"utterances",
         {{{"id", "u1"}, {"task", "vowel"}, {"audio", "v.wav"}}, {{"id", "u2"}, {"task", "bamboo"}, {"audio", "b.wav"}}}},
    };
    std::ofstream(dir / "ok.json") << j.dump();
    const auto m = load_manifest(dir / "ok.json");
    CHECK(m.utterances.size() == 2);
    CHECK(m.utterances[0].audio == dir / "v.wav");

    auto dup = j;
    dup["utterances"].push_back({{"id", "u3"}, {"task", "bamboo"}, {"audio", "b.wav"}});
    std::ofstream(dir / "dup.json") << dup.dump();
    CHECK(code_of([&] { load_manifest(dir / "dup.json"); }) == ErrorCode::DuplicateTask);

    auto absent = j;
    absent["utterances"][0]["audio"] = "nope.wav";
    std::ofstream(dir / "absent.json") << absent.dump();
    CHECK(code_of([&] { load_manifest(dir / "absent.json"); }) == ErrorCode::MissingFile);

    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK(code_of([&] { load_manifest(dir / "bad.json"); }) == ErrorCode::ParseError);
    CHECK(code_of([&] { load_manifest(dir / "missing.json"); }) == ErrorCode::MissingFile);

    auto no_scores = j;
    no_scores["subject"]["is_control"] = false;
    CHECK(code_of([&] { manifest_from_json(no_scores); }) == ErrorCode::MissingAlsfrs);

    auto seven_sits = j;
    for (int s = 1; s <= 6; ++s) seven_sits["utterances"].push_back({{"id", "s" + std::to_string(s)}, {"task", "sit" + std::to_string(s)}, {"audio", "v.wav"}});
    CHECK_NOTHROW(manifest_from_json(seven_sits, dir));
    seven_sits["utterances"].push_back({{"id", "again"}, {"task", "sit2"}, {"audio", "v.wav"}});
    CHECK(code_of([&] { manifest_from_json(seven_sits, dir); }) == ErrorCode::DuplicateTask);

    auto saved_path = dir / "saved.json";
    save_manifest(m, saved_path);
    CHECK(load_manifest(saved_path) == m);
}

TEST_CASE("one session per subject") {
    SessionManifest a;
    a.subject = patient(all(4), "A");
    SessionManifest b;
    b.subject = patient(all(4), "B");
    std::vector<SessionManifest> ok{a, b};
    CHECK_NOTHROW(check_one_session_per_subject(ok));
    std::vector<SessionManifest> twice{a, b, a};
    CHECK(code_of([&] { check_one_session_per_subject(twice); }) == ErrorCode::DuplicateSession);
}

TEST_CASE("manifest saved under a relative directory loads back") {
    namespace fs = std::filesystem;
    const auto dir = scratch("relative");
    const auto previous = fs::current_path();
    fs::current_path(dir);
    fs::create_directories("nested/session");
    std::ofstream("nested/session/v.wav") << "x";
    SessionManifest m;
    m.subject = patient(all(4));
    m.utterances.push_back({TaskKind::held_vowel(), "nested/session/v.wav", std::nullopt, std::nullopt, "u1"});
    save_manifest(m, "nested/session/manifest.json");
    const auto j = nlohmann::json::parse(std::ifstream("nested/session/manifest.json"));
    const std::string audio = j["utterances"][0]["audio"];
    const auto loaded = load_manifest("nested/session/manifest.json");
    const bool same_file = fs::equivalent(loaded.utterances.at(0).audio, dir / "nested" / "session" / "v.wav");
    fs::current_path(previous);
    CHECK(audio == "v.wav");
    CHECK(same_file);
}
