#pragma once

#include "speechbio/session.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace speechbio {

enum class Modality { Acoustic, Visual };

std::string_view to_string(Modality modality) noexcept;

struct MetricInfo {
    std::string name;
    std::string unit;
    Modality modality;
};

/// Every acoustic and facial metric the extractor can emit, in output order.
const std::vector<MetricInfo>& metric_registry();

/// Looks up a metric by name; a task suffix such as ".sit" is ignored.
const MetricInfo* find_metric(std::string_view name);

/// Durations are kept per task type instead of averaged across task types.
bool is_duration_metric(std::string_view name) noexcept;

/// One metric value of one utterance. `value` is absent for failed extractions.
struct UtteranceMetric {
    std::string subject_id;
    TaskKind task = TaskKind::held_vowel();
    std::string utterance_id;
    std::string metric;
    std::optional<double> value;
    std::string unit;
    /// "ok", "excluded:<reason>" or "error:<code>".
    std::string status = "ok";

    bool ok() const noexcept { return status == "ok" && value.has_value(); }
    friend bool operator==(const UtteranceMetric&, const UtteranceMetric&) = default;
};

/// Nine significant digits, shortest form.
std::string format_number(double value);

/// Rounds to nine significant digits so serialized JSON matches the CSV precision.
double round_sig9(double value);

inline constexpr std::string_view kMetricsCsvHeader = "subject_id,task,utterance_id,metric,value,unit,status";

/// Writes `# key=value` comment lines followed by the CSV table.
void write_metrics_csv(const std::filesystem::path& path, const std::vector<UtteranceMetric>& rows,
                       const std::vector<std::pair<std::string, std::string>>& metadata);

std::vector<UtteranceMetric> read_metrics_csv(const std::filesystem::path& path);

}  // namespace speechbio
