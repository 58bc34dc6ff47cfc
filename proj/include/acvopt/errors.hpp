#pragma once

#include <stdexcept>
#include <string>

namespace acvopt {

enum class ErrorCode {
  DimensionMismatch,
  AsymmetricCovariance,
  NotPositiveSemidefinite,
  NonpositiveCost,
  ZeroSubsetSize,
  InvalidBeta,
  OutOfRangeTarget,
  CyclicAssignment,
  OutOfRange,
  BudgetTooSmall,
  DegenerateBudget,
  Infeasible,
  AllInfeasible,
  EmptyScenarioSet,
  InconsistentPlan,
  BadInput,
};

inline const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::AsymmetricCovariance: return "AsymmetricCovariance";
    case ErrorCode::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case ErrorCode::NonpositiveCost: return "NonpositiveCost";
    case ErrorCode::ZeroSubsetSize: return "ZeroSubsetSize";
    case ErrorCode::InvalidBeta: return "InvalidBeta";
    case ErrorCode::OutOfRangeTarget: return "OutOfRangeTarget";
    case ErrorCode::CyclicAssignment: return "CyclicAssignment";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BudgetTooSmall: return "BudgetTooSmall";
    case ErrorCode::DegenerateBudget: return "DegenerateBudget";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::AllInfeasible: return "AllInfeasible";
    case ErrorCode::EmptyScenarioSet: return "EmptyScenarioSet";
    case ErrorCode::InconsistentPlan: return "InconsistentPlan";
    case ErrorCode::BadInput: return "BadInput";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

}  // namespace acvopt
