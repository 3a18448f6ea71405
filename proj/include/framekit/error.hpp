#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace framekit {

enum class ErrorCode {
  RankDeficient,
  NotTight,
  ShapeMismatch,
  BadDims,
  InvalidArgument,
  NotHermitian,
  CriterionDisagreement,
  NotInClassE,
  NotSorted,
  DimensionDeficit,
  InternalInvariantViolation,
  StructureMismatch,
  ParseError,
  ToleranceError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotTight: return "NotTight";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BadDims: return "BadDims";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::CriterionDisagreement: return "CriterionDisagreement";
    case ErrorCode::NotInClassE: return "NotInClassE";
    case ErrorCode::NotSorted: return "NotSorted";
    case ErrorCode::DimensionDeficit: return "DimensionDeficit";
    case ErrorCode::InternalInvariantViolation: return "InternalInvariantViolation";
    case ErrorCode::StructureMismatch: return "StructureMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ToleranceError: return "ToleranceError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the structure checks; `clause()` names the first clause that failed.
class StructureError : public Error {
 public:
  StructureError(std::string clause, const std::string& what)
      : Error(ErrorCode::StructureMismatch, clause + ": " + what), clause_(std::move(clause)) {}

  const std::string& clause() const noexcept { return clause_; }

 private:
  std::string clause_;
};

}  // namespace framekit
