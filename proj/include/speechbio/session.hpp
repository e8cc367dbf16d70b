#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace speechbio {

/// Elicitation task of a single utterance.
class TaskKind {
public:
    enum class Kind { HeldVowel, Sit, Bamboo, Ddk, PictureDescription };

    static TaskKind held_vowel() { return TaskKind(Kind::HeldVowel, 0); }
    static TaskKind sit(int index);
    static TaskKind bamboo() { return TaskKind(Kind::Bamboo, 0); }
    static TaskKind ddk() { return TaskKind(Kind::Ddk, 0); }
    static TaskKind picture_description() { return TaskKind(Kind::PictureDescription, 0); }

    /// Parses "vowel", "sit1".."sit6", "bamboo", "ddk", "picture".
    static TaskKind parse(std::string_view text);

    Kind kind() const noexcept { return kind_; }
    int sit_index() const noexcept { return sit_index_; }

    /// Task type used when averaging metrics ("vowel", "sit", "bamboo", "ddk", "picture").
    std::string_view type_name() const noexcept;
    std::string to_string() const;

    bool is_reading() const noexcept { return kind_ == Kind::Sit || kind_ == Kind::Bamboo; }

    friend bool operator==(const TaskKind&, const TaskKind&) = default;

private:
    TaskKind(Kind kind, int sit_index) : kind_(kind), sit_index_(sit_index) {}

    Kind kind_;
    int sit_index_;
};

inline constexpr int kBambooWordCount = 99;
inline constexpr std::string_view kDdkSyllables = "pataka";

/// Expected word counts of the reading tasks. The six SIT sentence lengths are
/// deployment configuration; the defaults span the protocol's 5..15 word range.
struct TaskTable {
    std::array<int, 6> sit_words{5, 7, 9, 11, 13, 15};
    int bamboo_words = kBambooWordCount;

    /// Expected word count for reading tasks, nullopt otherwise.
    std::optional<int> expected_words(const TaskKind& task) const;
};

enum class Sex { Female, Male };

std::string_view to_string(Sex sex) noexcept;
Sex parse_sex(std::string_view text);

inline constexpr int kAlsfrsItemCount = 12;
inline constexpr int kAlsfrsBulbarItems = 3;

struct AlsfrsR {
    std::array<int, kAlsfrsItemCount> items{};
    int total = 0;
    int bulbar_subscore = 0;

    friend bool operator==(const AlsfrsR&, const AlsfrsR&) = default;
};

/// Scores a questionnaire given in questionnaire order. Items 1-3 form the bulbar sub-score.
AlsfrsR score_alsfrs(std::span<const int> items);

enum class Cohort { CON, BUL, PRE };

std::string_view to_string(Cohort cohort) noexcept;
Cohort parse_cohort(std::string_view text);

struct SubjectProfile {
    std::string subject_id;
    Sex sex = Sex::Female;
    double age = 0.0;
    bool is_control = false;
    std::optional<AlsfrsR> alsfrs;

    Cohort cohort() const;

    friend bool operator==(const SubjectProfile&, const SubjectProfile&) = default;
};

/// CON for controls; BUL when the bulbar sub-score is below 12, PRE when it is 12.
Cohort stratify(const SubjectProfile& profile);

struct Utterance {
    TaskKind task = TaskKind::held_vowel();
    std::filesystem::path audio;
    std::optional<std::filesystem::path> landmarks;
    std::optional<double> fps;
    std::string utterance_id;

    friend bool operator==(const Utterance&, const Utterance&) = default;
};

struct SessionManifest {
    SubjectProfile subject;
    TaskTable tasks;
    std::vector<Utterance> utterances;

    friend bool operator==(const SessionManifest& a, const SessionManifest& b) {
        return a.subject == b.subject && a.tasks.sit_words == b.tasks.sit_words &&
               a.tasks.bamboo_words == b.tasks.bamboo_words && a.utterances == b.utterances;
    }
};

nlohmann::json subject_to_json(const SubjectProfile& subject);
SubjectProfile subject_from_json(const nlohmann::json& j);

/// Relative paths are written relative to `base_dir` when given.
nlohmann::json manifest_to_json(const SessionManifest& manifest,
                                const std::filesystem::path& base_dir = {});

/// Validates structure and task multiplicity. Relative paths resolve against `base_dir`.
/// File existence is only checked by load_manifest.
SessionManifest manifest_from_json(const nlohmann::json& j,
                                   const std::filesystem::path& base_dir = {});

SessionManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const SessionManifest& manifest, const std::filesystem::path& path);

/// Rejects manifests whose subjects repeat (one session per subject).
void check_one_session_per_subject(std::span<const SessionManifest> manifests);

}  // namespace speechbio
