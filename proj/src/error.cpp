#include "gsvb/error.hpp"

namespace gsvb {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::TooFewSnapshots: return "TooFewSnapshots";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::EigenFailure: return "EigenFailure";
    case ErrorCode::InvalidParams: return "InvalidParams";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace gsvb
