#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace invit {

enum class ErrorCode {
  DimensionMismatch,
  ZeroVector,
  NotPositiveDefinite,
  MissingMetadata,
  InvalidArgument,
  PreconditionViolation,
  FixedPoint,
  NotCertified,
  ClusterAmbiguity,
  ParseError,
  SchemaError,
  MissingField,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is
/// stable and is what callers (and the CLI exit-code mapping) branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the truncated CG correction when max_iter is exhausted before
/// the energy-norm error is certified below eta.
class NotCertifiedError : public Error {
 public:
  NotCertifiedError(double best_eta, int iterations);
  double best_eta() const noexcept { return best_eta_; }
  int iterations() const noexcept { return iterations_; }

 private:
  double best_eta_;
  int iterations_;
};

/// A failure inside the outer loop, tagged with the step where it happened.
class StepError : public Error {
 public:
  StepError(int step, const Error& cause);
  int step() const noexcept { return step_; }
  ErrorCode cause_code() const noexcept { return cause_; }

 private:
  int step_;
  ErrorCode cause_;
};

}  // namespace invit
