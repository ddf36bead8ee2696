#include "invit/errors.hpp"

namespace invit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::ZeroVector: return "zero vector";
    case ErrorCode::NotPositiveDefinite: return "not positive definite";
    case ErrorCode::MissingMetadata: return "missing spectral metadata";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::PreconditionViolation: return "precondition violation";
    case ErrorCode::FixedPoint: return "eigenvector fixed point";
    case ErrorCode::NotCertified: return "not certified";
    case ErrorCode::ClusterAmbiguity: return "cluster ambiguity";
    case ErrorCode::ParseError: return "parse error";
    case ErrorCode::SchemaError: return "schema error";
    case ErrorCode::MissingField: return "missing field";
    case ErrorCode::IoError: return "i/o error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

NotCertifiedError::NotCertifiedError(double best_eta, int iterations)
    : Error(ErrorCode::NotCertified,
            "CG stopped after " + std::to_string(iterations) +
                " iterations, best relative energy error " + std::to_string(best_eta)),
      best_eta_(best_eta),
      iterations_(iterations) {}

StepError::StepError(int step, const Error& cause)
    : Error(cause.code(), "step " + std::to_string(step) + ": " + cause.what()),
      step_(step),
      cause_(cause.code()) {}

}  // namespace invit
