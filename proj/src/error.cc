#include "headfilt/error.h"

namespace headfilt {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kMissingOperand: return "MissingOperand";
    case ErrorCode::kTrailingInput: return "TrailingInput";
    case ErrorCode::kDepthExceeded: return "DepthExceeded";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kEmptyDatabase: return "EmptyDatabase";
    case ErrorCode::kMalformedLine: return "MalformedLine";
    case ErrorCode::kUnknownComponent: return "UnknownComponent";
    case ErrorCode::kUnknownOperator: return "UnknownOperator";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDegenerateCalibration: return "DegenerateCalibration";
    case ErrorCode::kUnknownCharacter: return "UnknownCharacter";
    case ErrorCode::kEmptySets: return "EmptySets";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kPositionOutOfRange: return "PositionOutOfRange";
    case ErrorCode::kFormatError: return "FormatError";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kIdMismatch: return "IdMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace headfilt
