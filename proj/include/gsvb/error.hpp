#pragma once

#include <stdexcept>
#include <string>

namespace gsvb {

enum class ErrorCode {
  InvalidArgument,
  DomainError,
  NonConvergent,
  QuadratureFailure,
  NotPositiveDefinite,
  DimensionMismatch,
  IoError,
  ParseError,
  ConfigError,
  TooFewSnapshots,
  ZeroReference,
  EigenFailure,
  InvalidParams,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Every failure raised by the
/// library is an Error, so callers (and the C ABI) can map it without
/// string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace gsvb
