#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nlirls {

enum class ErrorCode {
  DimensionMismatch,
  InvalidDims,
  InvalidP,
  InvalidConfig,
  NonPositiveEps,
  EmptyResidual,
  JacobianUnavailable,
  NonFiniteEvaluation,
  SingularNormalEquations,
  IndexOutOfRange,
  DegenerateSample,
  NonPositiveAlpha,
  TraceTooShort,
  DegeneratePair,
  NonPositiveCHat,
  AllStartsFailed,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace nlirls
