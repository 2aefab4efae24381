#pragma once
// Error taxonomy shared by every module. Each failure mode the library can
// report has one code; Error carries the code plus a human-readable message.

#include <stdexcept>
#include <string>

namespace uqdiag {

enum class ErrorCode {
    // gateway
    ProviderUnavailable,
    AuthError,
    LogprobsUnsupported,
    FixtureExhausted,
    SearchUnavailable,
    // sampling / confidence
    ConfidenceUnparseable,
    MixedQuestionIds,
    EmptyLikelihoods,
    OutOfRangeLikelihood,
    // diagnosis
    LabelUnparseable,
    ExtractionUnparseable,
    // calibration
    EmptyRecords,
    DegenerateClasses,
    // run store / ingestion
    ParseError,
    ValidationFailed,
    ManifestCorrupt,
    ConfigMismatch,
    StageOrderError,
    EmptyCorpus,
    LockHeld,
    IoError,
    // configuration / contract
    InvalidConfig,
    Precondition,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace uqdiag
