#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace msband {

// One code per distinct failure the caller can react to.  The C API mirrors
// this enum value for value, so entries must only ever be appended.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument,
  DomainError,
  OverlappingBlocks,
  AsymmetricSpectrum,
  ZeroLevel,
  InfeasiblePlacement,
  GridMismatch,
  SizeMismatch,
  DimensionError,
  RankDeficient,
  SingularSystem,
  ImaginaryResidue,
  DegenerateCovariance,
  EmptySupport,
  InsufficientData,
  NonNumericCell,
  ZeroReference,
  IoError,
  ParseError,
  Internal,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OverlappingBlocks: return "OverlappingBlocks";
    case ErrorCode::AsymmetricSpectrum: return "AsymmetricSpectrum";
    case ErrorCode::ZeroLevel: return "ZeroLevel";
    case ErrorCode::InfeasiblePlacement: return "InfeasiblePlacement";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::DimensionError: return "DimensionError";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::ImaginaryResidue: return "ImaginaryResidue";
    case ErrorCode::DegenerateCovariance: return "DegenerateCovariance";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::NonNumericCell: return "NonNumericCell";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  // For numerical failures: the condition estimate of the offending system,
  // NaN when not applicable.
  Error(ErrorCode code, const std::string& message, double condition)
      : std::runtime_error(message), code_(code), condition_(condition) {}

  ErrorCode code() const { return code_; }
  double condition() const { return condition_; }

 private:
  ErrorCode code_;
  double condition_ = std::nan("");
};

}  // namespace msband
