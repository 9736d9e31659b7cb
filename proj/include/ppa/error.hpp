#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppa {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  InsufficientData,
  RankDeficient,
  NonOrthogonal,
  DegeneratePilot,
  DimensionTooLarge,
  NonNested,
  OutOfSupport,
  DegenerateSample,
  ZeroReference,
  NoImprovingDirection,
  AllWeightsDegenerate,
  DegenerateDerivative,
  DomainViolation,
  Io,
  Parse,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonOrthogonal: return "NonOrthogonal";
    case ErrorCode::DegeneratePilot: return "DegeneratePilot";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NonNested: return "NonNested";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::DegenerateSample: return "DegenerateSample";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::NoImprovingDirection: return "NoImprovingDirection";
    case ErrorCode::AllWeightsDegenerate: return "AllWeightsDegenerate";
    case ErrorCode::DegenerateDerivative: return "DegenerateDerivative";
    case ErrorCode::DomainViolation: return "DomainViolation";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

/// Library-wide exception; `code()` identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace ppa
