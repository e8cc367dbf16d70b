#include "speechbio/session.hpp"

#include "speechbio/error.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace speechbio {

namespace fs = std::filesystem;
using nlohmann::json;

TaskKind TaskKind::sit(int index) {
    if (index < 1 || index > 6) {
        throw Error(ErrorCode::InvalidArgument, "SIT index must be in 1..6, got " + std::to_string(index));
    }
    return TaskKind(Kind::Sit, index);
}

TaskKind TaskKind::parse(std::string_view text) {
    if (text == "vowel") return held_vowel();
    if (text == "bamboo") return bamboo();
    if (text == "ddk") return ddk();
    if (text == "picture") return picture_description();
    if (text.size() == 4 && text.substr(0, 3) == "sit" && text[3] >= '1' && text[3] <= '6') {
        return sit(text[3] - '0');
    }
    throw Error(ErrorCode::ParseError, "unknown task '" + std::string(text) + "'");
}

std::string_view TaskKind::type_name() const noexcept {
    switch (kind_) {
        case Kind::HeldVowel: return "vowel";
        case Kind::Sit: return "sit";
        case Kind::Bamboo: return "bamboo";
        case Kind::Ddk: return "ddk";
        case Kind::PictureDescription: return "picture";
    }
    return "unknown";
}

std::string TaskKind::to_string() const {
    if (kind_ == Kind::Sit) return "sit" + std::to_string(sit_index_);
    return std::string(type_name());
}

std::optional<int> TaskTable::expected_words(const TaskKind& task) const {
    switch (task.kind()) {
        case TaskKind::Kind::Sit: return sit_words[static_cast<std::size_t>(task.sit_index() - 1)];
        case TaskKind::Kind::Bamboo: return bamboo_words;
        default: return std::nullopt;
    }
}

std::string_view to_string(Sex sex) noexcept {
    return sex == Sex::Female ? "female" : "male";
}

Sex parse_sex(std::string_view text) {
    if (text == "female" || text == "F" || text == "f") return Sex::Female;
    if (text == "male" || text == "M" || text == "m") return Sex::Male;
    throw Error(ErrorCode::ParseError, "unknown sex '" + std::string(text) + "'");
}

AlsfrsR score_alsfrs(std::span<const int> items) {
    if (items.size() != kAlsfrsItemCount) {
        throw Error(ErrorCode::WrongItemCount,
                    "expected 12 ALSFRS-R items, got " + std::to_string(items.size()));
    }
    AlsfrsR score;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i] < 0 || items[i] > 4) {
            throw Error(ErrorCode::ItemOutOfRange, "item " + std::to_string(i + 1) + " = " +
                                                       std::to_string(items[i]) + " not in 0..4");
        }
        score.items[i] = items[i];
    }
    score.total = std::accumulate(score.items.begin(), score.items.end(), 0);
    score.bulbar_subscore =
        std::accumulate(score.items.begin(), score.items.begin() + kAlsfrsBulbarItems, 0);
    return score;
}

std::string_view to_string(Cohort cohort) noexcept {
    switch (cohort) {
        case Cohort::CON: return "CON";
        case Cohort::BUL: return "BUL";
        case Cohort::PRE: return "PRE";
    }
    return "?";
}

Cohort parse_cohort(std::string_view text) {
    if (text == "CON") return Cohort::CON;
    if (text == "BUL") return Cohort::BUL;
    if (text == "PRE") return Cohort::PRE;
    throw Error(ErrorCode::ParseError, "unknown cohort '" + std::string(text) + "'");
}

Cohort stratify(const SubjectProfile& profile) {
    if (profile.is_control) return Cohort::CON;
    if (!profile.alsfrs) {
        throw Error(ErrorCode::MissingAlsfrs, "patient '" + profile.subject_id + "' has no ALSFRS-R scores");
    }
    return profile.alsfrs->bulbar_subscore < 12 ? Cohort::BUL : Cohort::PRE;
}

Cohort SubjectProfile::cohort() const { return stratify(*this); }

json subject_to_json(const SubjectProfile& subject) {
    json j = {
        {"id", subject.subject_id},
        {"sex", std::string(to_string(subject.sex))},
        {"age", subject.age},
        {"is_control", subject.is_control},
    };
    if (subject.alsfrs) j["alsfrs"] = subject.alsfrs->items;
    return j;
}

namespace {

template <class T>
T require(const json& j, const char* key, std::string_view where) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string(where) + ": field '" + key + "': " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_relative() && !base.empty()) path = base / path;
    return path.lexically_normal();
}

std::string relative_to(const fs::path& base, const fs::path& p) {
    // In-memory relative paths are relative to the working directory, like the base.
    if (base.empty()) return p.generic_string();
    fs::path rel = fs::absolute(p).lexically_normal().lexically_relative(fs::absolute(base).lexically_normal());
    return rel.empty() ? p.generic_string() : rel.generic_string();
}

}  // namespace

SubjectProfile subject_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "subject must be an object");
    SubjectProfile s;
    s.subject_id = require<std::string>(j, "id", "subject");
    if (s.subject_id.empty()) throw Error(ErrorCode::ParseError, "subject id is empty");
    s.sex = parse_sex(require<std::string>(j, "sex", "subject"));
    s.age = j.value("age", 0.0);
    s.is_control = require<bool>(j, "is_control", "subject");
    if (j.contains("alsfrs") && !j.at("alsfrs").is_null()) {
        const auto items = require<std::vector<int>>(j, "alsfrs", "subject");
        s.alsfrs = score_alsfrs(items);
    }
    if (!s.is_control && !s.alsfrs) {
        throw Error(ErrorCode::MissingAlsfrs, "patient '" + s.subject_id + "' has no ALSFRS-R scores");
    }
    return s;
}

json manifest_to_json(const SessionManifest& manifest, const fs::path& base_dir) {
    json utterances = json::array();
    for (const auto& u : manifest.utterances) {
        json e = {
            {"id", u.utterance_id},
            {"task", u.task.to_string()},
            {"audio", relative_to(base_dir, u.audio)},
        };
        if (u.landmarks) e["landmarks"] = relative_to(base_dir, *u.landmarks);
        if (u.fps) e["fps"] = *u.fps;
        utterances.push_back(std::move(e));
    }
    return {
        {"subject", subject_to_json(manifest.subject)},
        {"sit_word_counts", manifest.tasks.sit_words},
        {"bamboo_word_count", manifest.tasks.bamboo_words},
        {"utterances", std::move(utterances)},
    };
}

SessionManifest manifest_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "manifest must be a JSON object");
    SessionManifest m;
    if (!j.contains("subject")) throw Error(ErrorCode::ParseError, "manifest: missing 'subject'");
    m.subject = subject_from_json(j.at("subject"));

    if (j.contains("sit_word_counts")) {
        const auto counts = require<std::vector<int>>(j, "sit_word_counts", "manifest");
        if (counts.size() != 6) {
            throw Error(ErrorCode::ParseError, "manifest: sit_word_counts needs 6 entries");
        }
        for (std::size_t i = 0; i < 6; ++i) {
            if (counts[i] <= 0) throw Error(ErrorCode::ParseError, "manifest: word counts must be > 0");
            m.tasks.sit_words[i] = counts[i];
        }
    }
    if (j.contains("bamboo_word_count")) {
        m.tasks.bamboo_words = require<int>(j, "bamboo_word_count", "manifest");
        if (m.tasks.bamboo_words <= 0) throw Error(ErrorCode::ParseError, "manifest: word counts must be > 0");
    }

    if (!j.contains("utterances") || !j.at("utterances").is_array()) {
        throw Error(ErrorCode::ParseError, "manifest: 'utterances' must be an array");
    }
    int vowels = 0, bamboos = 0, ddks = 0;
    std::set<int> sits;
    std::set<std::string> ids;
    for (const auto& e : j.at("utterances")) {
        Utterance u;
        u.utterance_id = require<std::string>(e, "id", "utterance");
        u.task = TaskKind::parse(require<std::string>(e, "task", "utterance"));
        u.audio = resolve(base_dir, require<std::string>(e, "audio", "utterance"));
        if (e.contains("landmarks") && !e.at("landmarks").is_null()) {
            u.landmarks = resolve(base_dir, require<std::string>(e, "landmarks", "utterance"));
        }
        if (e.contains("fps") && !e.at("fps").is_null()) {
            u.fps = require<double>(e, "fps", "utterance");
            if (!(*u.fps > 0.0)) throw Error(ErrorCode::ParseError, "utterance fps must be > 0");
        }
        if (!ids.insert(u.utterance_id).second) {
            throw Error(ErrorCode::ParseError, "duplicate utterance id '" + u.utterance_id + "'");
        }
        bool duplicate = false;
        switch (u.task.kind()) {
            case TaskKind::Kind::HeldVowel: duplicate = ++vowels > 1; break;
            case TaskKind::Kind::Bamboo: duplicate = ++bamboos > 1; break;
            case TaskKind::Kind::Ddk: duplicate = ++ddks > 1; break;
            case TaskKind::Kind::Sit: duplicate = !sits.insert(u.task.sit_index()).second; break;
            case TaskKind::Kind::PictureDescription: break;
        }
        if (duplicate) {
            throw Error(ErrorCode::DuplicateTask,
                        "task '" + u.task.to_string() + "' appears more than once");
        }
        m.utterances.push_back(std::move(u));
    }
    return m;
}

SessionManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    SessionManifest m = manifest_from_json(j, path.parent_path());
    for (const auto& u : m.utterances) {
        if (!fs::is_regular_file(u.audio)) {
            throw Error(ErrorCode::MissingFile, "audio file not found: " + u.audio.string());
        }
        if (u.landmarks && !fs::is_regular_file(*u.landmarks)) {
            throw Error(ErrorCode::MissingFile, "landmark file not found: " + u.landmarks->string());
        }
    }
    return m;
}

void save_manifest(const SessionManifest& manifest, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << manifest_to_json(manifest, path.parent_path()).dump(2) << '\n';
}

void check_one_session_per_subject(std::span<const SessionManifest> manifests) {
    std::set<std::string> seen;
    for (const auto& m : manifests) {
        if (!seen.insert(m.subject.subject_id).second) {
            throw Error(ErrorCode::DuplicateSession,
                        "subject '" + m.subject.subject_id + "' has more than one session");
        }
    }
}

}  // namespace speechbio
