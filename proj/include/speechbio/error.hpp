#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace speechbio {

enum class ErrorCode {
    InvalidArgument,
    IoError,
    ParseError,
    // session model
    ItemOutOfRange,
    WrongItemCount,
    MissingAlsfrs,
    DuplicateTask,
    DuplicateSession,
    MissingFile,
    // signal processing
    ClipTooShort,
    DegenerateSignal,
    InsufficientVoicing,
    TooFewPeriods,
    TooFewAmplitudes,
    NonPositiveAmplitude,
    NoSpeechSegments,
    NoSpeechDetected,
    TooFewCycles,
    // landmarks
    NoValidFrames,
    TrackTooShort,
    TrackGap,
    DegenerateContour,
    // statistics and models
    DegenerateGroup,
    AllValuesTied,
    ZeroControlVariance,
    NonConvergence,
    ClassTooSmall,
    SingleClass,
    TooFewSamples,
    UnknownScenario,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace speechbio
