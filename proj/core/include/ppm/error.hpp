#pragma once

#include <stdexcept>
#include <string>

namespace ppm {

enum class ErrorKind {
  InvalidInput,
  DimensionMismatch,
  RequiresRegularization,
  MissingSigma,
  SizeCapExceeded,
  Config,
  Io,
};

/// Exception type thrown by every ppm component. The kind lets callers
/// (the CLI in particular) map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ppm
