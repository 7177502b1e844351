#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covlaw {

enum class ErrorCode {
  InvalidArgument,
  InvalidPoint,
  NonConvergence,
  PoleHit,
  DegenerateSpectrum,
  BracketFailure,
  QuantileOutOfRange,
  NearSingular,
  McmcNotMixed,
  UnsupportedAnalytic,
  NotLogConcave,
  NumericalFailure,
  IndexMismatch,
  EmptyWindow,
  InsideSpectrum,
  StorageGuard,
  InsufficientSamples,
  WorkCap,
  NoOrientation,
  NonPositiveValue,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so the
// harness can record it per grid point instead of aborting a sweep.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidPoint: return "InvalidPoint";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::PoleHit: return "PoleHit";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::BracketFailure: return "BracketFailure";
    case ErrorCode::QuantileOutOfRange: return "QuantileOutOfRange";
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::McmcNotMixed: return "McmcNotMixed";
    case ErrorCode::UnsupportedAnalytic: return "UnsupportedAnalytic";
    case ErrorCode::NotLogConcave: return "NotLogConcave";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::IndexMismatch: return "IndexMismatch";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::InsideSpectrum: return "InsideSpectrum";
    case ErrorCode::StorageGuard: return "StorageGuard";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::WorkCap: return "WorkCap";
    case ErrorCode::NoOrientation: return "NoOrientation";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace covlaw
