#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace evs {

enum class ErrorCode {
  invalid_argument,
  corrupt_file,
  unsupported_format,
  invalid_mask,
  invalid_stream,
  insufficient_data,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::corrupt_file: return "corrupt-file";
    case ErrorCode::unsupported_format: return "unsupported-format";
    case ErrorCode::invalid_mask: return "invalid-mask";
    case ErrorCode::invalid_stream: return "invalid-stream";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

// Every failure in the library surfaces as an evs::Error carrying a code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::invalid_argument, what);
}

}  // namespace evs
