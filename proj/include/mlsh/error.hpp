#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mlsh {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  Calibration,
  Format,
  Io,
};

std::string_view to_string(ErrorKind kind);

// Every failure surfaced by the library is an mlsh::Error; the kind is what
// the CLI reports in its machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace mlsh
