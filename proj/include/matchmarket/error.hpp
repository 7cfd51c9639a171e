#pragma once

#include <stdexcept>
#include <string>

namespace matchmarket {

enum class ErrorCode {
  OutOfRange,
  DimensionMismatch,
  InvalidParameter,
  NonConcave,
  TooLarge,
  Degenerate,
  Malformed,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::NonConcave: return "NonConcave";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::Malformed: return "Malformed";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace matchmarket
