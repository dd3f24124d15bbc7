#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace feedwarden {

enum class ErrorCode {
  kWeightOutOfRange,
  kUnknownModality,
  kEmptyDescription,
  kZeroWeight,
  kEmptyText,
  kProviderUnavailable,
  kDimensionMismatch,
  kImageUnresolvable,
  kSliderOutOfRange,
  kEmptyProfile,
  kAllZeroWeights,
  kBackendFailure,
  kMalformedVerdict,
  kInvalidProposal,
  kStaleProposal,
  kUnknownDossier,
  kNotABlock,
  kMalformedProposal,
  kAlreadyResolved,
  kUnknownAppeal,
  kUnknownProposal,
  kUnknownRule,
  kDatasetMalformed,
  kMissingGroundTruth,
  kZeroBaselineFP,
  kParseError,
  kValidationError,
  kCorruptSnapshot,
  kStorageError,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Every domain failure in the library is reported as an Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace feedwarden
