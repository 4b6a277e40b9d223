#pragma once

#include <stdexcept>
#include <string>

namespace coop {

enum class ErrorCode {
  InvalidCalibration,
  NoGroundIntersection,
  InvalidImage,
  EmptyRoi,
  DomainError,
  DegenerateParameterization,
  SingularCovariance,
  DecodeError,
  ValidationError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidCalibration: return "invalid-calibration";
    case ErrorCode::NoGroundIntersection: return "no-ground-intersection";
    case ErrorCode::InvalidImage: return "invalid-image";
    case ErrorCode::EmptyRoi: return "empty-roi";
    case ErrorCode::DomainError: return "domain-error";
    case ErrorCode::DegenerateParameterization: return "degenerate-parameterization";
    case ErrorCode::SingularCovariance: return "singular-covariance";
    case ErrorCode::DecodeError: return "decode-error";
    case ErrorCode::ValidationError: return "validation-error";
    case ErrorCode::IoError: return "io-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace coop
