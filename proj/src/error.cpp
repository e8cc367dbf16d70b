#include "speechbio/error.hpp"

namespace speechbio {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ItemOutOfRange: return "ItemOutOfRange";
        case ErrorCode::WrongItemCount: return "WrongItemCount";
        case ErrorCode::MissingAlsfrs: return "MissingAlsfrs";
        case ErrorCode::DuplicateTask: return "DuplicateTask";
        case ErrorCode::DuplicateSession: return "DuplicateSession";
        case ErrorCode::MissingFile: return "MissingFile";
        case ErrorCode::ClipTooShort: return "ClipTooShort";
        case ErrorCode::DegenerateSignal: return "DegenerateSignal";
        case ErrorCode::InsufficientVoicing: return "InsufficientVoicing";
        case ErrorCode::TooFewPeriods: return "TooFewPeriods";
        case ErrorCode::TooFewAmplitudes: return "TooFewAmplitudes";
        case ErrorCode::NonPositiveAmplitude: return "NonPositiveAmplitude";
        case ErrorCode::NoSpeechSegments: return "NoSpeechSegments";
        case ErrorCode::NoSpeechDetected: return "NoSpeechDetected";
        case ErrorCode::TooFewCycles: return "TooFewCycles";
        case ErrorCode::NoValidFrames: return "NoValidFrames";
        case ErrorCode::TrackTooShort: return "TrackTooShort";
        case ErrorCode::TrackGap: return "TrackGap";
        case ErrorCode::DegenerateContour: return "DegenerateContour";
        case ErrorCode::DegenerateGroup: return "DegenerateGroup";
        case ErrorCode::AllValuesTied: return "AllValuesTied";
        case ErrorCode::ZeroControlVariance: return "ZeroControlVariance";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::ClassTooSmall: return "ClassTooSmall";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::UnknownScenario: return "UnknownScenario";
    }
    return "Unknown";
}

}  // namespace speechbio
