#include "lmf/error.hpp"

namespace lmf {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::WrongPointCount: return "WrongPointCount";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::UnlabeledRecord: return "UnlabeledRecord";
    case ErrorCode::DegenerateSource: return "DegenerateSource";
    case ErrorCode::DegenerateLandmarks: return "DegenerateLandmarks";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyIndexSet: return "EmptyIndexSet";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::AlreadyStandardized: return "AlreadyStandardized";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::MixedLabelGroup: return "MixedLabelGroup";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::AllCellsFailed: return "AllCellsFailed";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

} // namespace lmf
