#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmf {

enum class ErrorCode {
    MalformedFile,
    WrongPointCount,
    MissingFile,
    DuplicateId,
    UnknownLabel,
    UnlabeledRecord,
    DegenerateSource,
    DegenerateLandmarks,
    EmptyInput,
    EmptyIndexSet,
    TooFewSamples,
    AlreadyStandardized,
    DimensionMismatch,
    SingleClass,
    ClassTooSmall,
    MixedLabelGroup,
    EmptyClass,
    IoFailure,
    SchemaVersionMismatch,
    CorruptModel,
    AllCellsFailed,
    InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto a stable exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace lmf
