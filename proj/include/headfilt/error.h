#ifndef HEADFILT_ERROR_H_
#define HEADFILT_ERROR_H_

#include <stdexcept>
#include <string>

namespace headfilt {

enum class ErrorCode {
  kEmptyInput,
  kMissingOperand,
  kTrailingInput,
  kDepthExceeded,
  kIoError,
  kEmptyDatabase,
  kMalformedLine,
  kUnknownComponent,
  kUnknownOperator,
  kDimensionMismatch,
  kNonFiniteInput,
  kDegenerateCalibration,
  kUnknownCharacter,
  kEmptySets,
  kEmptyCorpus,
  kPositionOutOfRange,
  kFormatError,
  kVocabMismatch,
  kLengthMismatch,
  kVersionMismatch,
  kCorruptFile,
  kIdMismatch,
  kInvalidArgument,
};

const char* error_code_name(ErrorCode code);

// All library failures are reported through this exception; code() names the
// failure class so callers and tests can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace headfilt

#endif  // HEADFILT_ERROR_H_
