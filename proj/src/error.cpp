#include "mlsh/error.hpp"

namespace mlsh {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return "invalid_argument";
    case ErrorKind::DimensionMismatch:
      return "dimension_mismatch";
    case ErrorKind::Calibration:
      return "calibration";
    case ErrorKind::Format:
      return "format";
    case ErrorKind::Io:
      return "io";
  }
  return "unknown";
}

}  // namespace mlsh
