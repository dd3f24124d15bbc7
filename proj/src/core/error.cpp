#include "feedwarden/core/error.h"

namespace feedwarden {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kWeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::kUnknownModality: return "UnknownModality";
    case ErrorCode::kEmptyDescription: return "EmptyDescription";
    case ErrorCode::kZeroWeight: return "ZeroWeight";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kImageUnresolvable: return "ImageUnresolvable";
    case ErrorCode::kSliderOutOfRange: return "SliderOutOfRange";
    case ErrorCode::kEmptyProfile: return "EmptyProfile";
    case ErrorCode::kAllZeroWeights: return "AllZeroWeights";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kMalformedVerdict: return "MalformedVerdict";
    case ErrorCode::kInvalidProposal: return "InvalidProposal";
    case ErrorCode::kStaleProposal: return "StaleProposal";
    case ErrorCode::kUnknownDossier: return "UnknownDossier";
    case ErrorCode::kNotABlock: return "NotABlock";
    case ErrorCode::kMalformedProposal: return "MalformedProposal";
    case ErrorCode::kAlreadyResolved: return "AlreadyResolved";
    case ErrorCode::kUnknownAppeal: return "UnknownAppeal";
    case ErrorCode::kUnknownProposal: return "UnknownProposal";
    case ErrorCode::kUnknownRule: return "UnknownRule";
    case ErrorCode::kDatasetMalformed: return "DatasetMalformed";
    case ErrorCode::kMissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::kZeroBaselineFP: return "ZeroBaselineFP";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kCorruptSnapshot: return "CorruptSnapshot";
    case ErrorCode::kStorageError: return "StorageError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace feedwarden
