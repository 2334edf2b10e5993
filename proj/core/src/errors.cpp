#include "nlirls/errors.hpp"

namespace nlirls {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidDims: return "InvalidDims";
    case ErrorCode::InvalidP: return "InvalidP";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonPositiveEps: return "NonPositiveEps";
    case ErrorCode::EmptyResidual: return "EmptyResidual";
    case ErrorCode::JacobianUnavailable: return "JacobianUnavailable";
    case ErrorCode::NonFiniteEvaluation: return "NonFiniteEvaluation";
    case ErrorCode::SingularNormalEquations: return "SingularNormalEquations";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::NonPositiveAlpha: return "NonPositiveAlpha";
    case ErrorCode::TraceTooShort: return "TraceTooShort";
    case ErrorCode::DegeneratePair: return "DegeneratePair";
    case ErrorCode::NonPositiveCHat: return "NonPositiveCHat";
    case ErrorCode::AllStartsFailed: return "AllStartsFailed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace nlirls
