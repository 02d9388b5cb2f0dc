#pragma once

#include <stdexcept>
#include <string>

namespace rds {

enum class ErrorKind {
  InvalidParameter,
  DegenerateFiber,
  EmptyWindow,
  DimensionMismatch,
  NoConvergence,
  SupportOverlap,
  CycleMismatch,
  AllBelowThreshold,
  NoFixedSet,
  AllCensored,
  LostTrack,
  UnboundedKernel,
  MulticomponentSupport,
  UsageError,
};

const char* to_string(ErrorKind kind);

// Single exception type for every module; `kind()` tells the failure class
// apart so callers (and the CLI) can map it without RTTI ladders.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::DegenerateFiber: return "DegenerateFiber";
    case ErrorKind::EmptyWindow: return "EmptyWindow";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::SupportOverlap: return "SupportOverlap";
    case ErrorKind::CycleMismatch: return "CycleMismatch";
    case ErrorKind::AllBelowThreshold: return "AllBelowThreshold";
    case ErrorKind::NoFixedSet: return "NoFixedSet";
    case ErrorKind::AllCensored: return "AllCensored";
    case ErrorKind::LostTrack: return "LostTrack";
    case ErrorKind::UnboundedKernel: return "UnboundedKernel";
    case ErrorKind::MulticomponentSupport: return "MulticomponentSupport";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Error";
}

}  // namespace rds
