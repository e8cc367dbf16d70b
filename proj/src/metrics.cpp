#include "speechbio/metrics.hpp"

#include "speechbio/error.hpp"
#include "speechbio/facial.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace speechbio {

std::string_view to_string(Modality modality) noexcept {
    return modality == Modality::Acoustic ? "acoustic" : "visual";
}

const std::vector<MetricInfo>& metric_registry() {
    static const std::vector<MetricInfo> registry = [] {
        std::vector<MetricInfo> r = {
            {"mean_f0", "Hz", Modality::Acoustic},
            {"jitter", "%", Modality::Acoustic},
            {"shimmer", "%", Modality::Acoustic},
            {"hnr", "dB", Modality::Acoustic},
            {"cpp", "dB", Modality::Acoustic},
            {"speaking_duration", "s", Modality::Acoustic},
            {"articulation_duration", "s", Modality::Acoustic},
            {"speaking_rate", "words/min", Modality::Acoustic},
            {"articulation_rate", "words/min", Modality::Acoustic},
            {"ppt", "%", Modality::Acoustic},
            {"syllable_rate", "syllables/s", Modality::Acoustic},
            {"syllable_count", "count", Modality::Acoustic},
            {"ctv", "s", Modality::Acoustic},
            {"intensity", "dB", Modality::Acoustic},
        };
        for (const auto& name : facial_metric_names()) {
            std::string unit = "ild";
            if (name.starts_with("S_") && name != "S_ratio_avg") unit = "ild^2";
            if (name == "S_ratio_avg") unit = "ratio";
            if (name == "eye_blinks") unit = "1/s";
            if (name[0] == 'v') unit = "ild/frame";
            if (name[0] == 'a') unit = "ild/frame^2";
            if (name[0] == 'j') unit = "ild/frame^3";
            r.push_back({name, unit, Modality::Visual});
        }
        return r;
    }();
    return registry;
}

const MetricInfo* find_metric(std::string_view name) {
    const auto dot = name.find('.');
    if (dot != std::string_view::npos) name = name.substr(0, dot);
    for (const auto& m : metric_registry()) {
        if (m.name == name) return &m;
    }
    return nullptr;
}

bool is_duration_metric(std::string_view name) noexcept {
    return name == "speaking_duration" || name == "articulation_duration";
}

std::string format_number(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

double round_sig9(double value) {
    if (!std::isfinite(value)) return value;
    return std::strtod(format_number(value).c_str(), nullptr);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<UtteranceMetric>& rows,
                       const std::vector<std::pair<std::string, std::string>>& metadata) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    for (const auto& [key, value] : metadata) out << "# " << key << '=' << value << '\n';
    out << kMetricsCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.subject_id << ',' << r.task.to_string() << ',' << r.utterance_id << ',' << r.metric << ','
            << (r.value ? format_number(*r.value) : "") << ',' << r.unit << ',' << r.status << '\n';
    }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<UtteranceMetric> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
    std::vector<UtteranceMetric> rows;
    std::string line;
    bool header_seen = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kMetricsCsvHeader) throw Error(ErrorCode::ParseError, path.string() + ": unexpected header");
            header_seen = true;
            continue;
        }
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
            const auto comma = line.find(',', start);
            f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (f.size() != 7) throw Error(ErrorCode::ParseError, where + ": expected 7 columns");
        UtteranceMetric r;
        r.subject_id = f[0];
        r.task = TaskKind::parse(f[1]);
        r.utterance_id = f[2];
        r.metric = f[3];
        if (!f[4].empty()) {
            char* end = nullptr;
            const double v = std::strtod(f[4].c_str(), &end);
            if (end != f[4].c_str() + f[4].size()) throw Error(ErrorCode::ParseError, where + ": bad value");
            r.value = v;
        }
        r.unit = f[5];
        r.status = f[6];
        rows.push_back(std::move(r));
    }
    if (!header_seen) throw Error(ErrorCode::ParseError, path.string() + ": missing header");
    return rows;
}

}  // namespace speechbio
