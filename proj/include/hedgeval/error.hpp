#pragma once

#include <stdexcept>
#include <string>

namespace hedgeval {

enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kMalformedRle,
  kMalformedString,
  kLoad,
  kConfig,
  kVerify,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kMalformedRle: return "malformed RLE";
    case ErrorKind::kMalformedString: return "malformed RLE string";
    case ErrorKind::kLoad: return "load error";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kVerify: return "verification failure";
  }
  return "error";
}

// All library failures are reported through this one exception type; the
// kind lets callers (and tests) branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hedgeval
