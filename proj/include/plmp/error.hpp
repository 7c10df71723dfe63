#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace plmp {

enum class ErrorCode {
  kCycleDetected,
  kDisconnected,
  kSingularIncidence,
  kDimensionMismatch,
  kInvalidArgument,
  kUnsupportedDistribution,
  kOutOfSupport,
  kIndexOutOfRange,
  kInvalidRisk,
  kInconsistentDimensions,
  kInfeasible,
  kSolverFailure,
  kMissingDuals,
  kInfeasibleBoundary,
  kPathMismatch,
  kNotConverged,
  kParseError,
  kValidationError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a per-timestep clearing has no feasible dispatch.
class InfeasibleTimestep : public Error {
 public:
  InfeasibleTimestep(int t, const std::string& what)
      : Error(ErrorCode::kInfeasible, "timestep " + std::to_string(t) + ": " + what),
        timestep_(t) {}

  int timestep() const noexcept { return timestep_; }

 private:
  int timestep_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kSingularIncidence: return "SingularIncidence";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnsupportedDistribution: return "UnsupportedDistribution";
    case ErrorCode::kOutOfSupport: return "OutOfSupport";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kInvalidRisk: return "InvalidRisk";
    case ErrorCode::kInconsistentDimensions: return "InconsistentDimensions";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kSolverFailure: return "SolverFailure";
    case ErrorCode::kMissingDuals: return "MissingDuals";
    case ErrorCode::kInfeasibleBoundary: return "InfeasibleBoundary";
    case ErrorCode::kPathMismatch: return "PathMismatch";
    case ErrorCode::kNotConverged: return "NotConverged";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace plmp
