#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace guidewave {

/// Machine-readable failure category carried by every library exception.
enum class ErrorCode {
  invalid_parameter,
  out_of_domain,
  grid_too_small,
  not_split,
  insufficient_margin,
  numerical_failure,
  spectrum_mismatch,
  truncation,
  empty_channel,
  config,
  io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid_parameter";
    case ErrorCode::out_of_domain: return "out_of_domain";
    case ErrorCode::grid_too_small: return "grid_too_small";
    case ErrorCode::not_split: return "not_split";
    case ErrorCode::insufficient_margin: return "insufficient_margin";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::spectrum_mismatch: return "spectrum_mismatch";
    case ErrorCode::truncation: return "truncation";
    case ErrorCode::empty_channel: return "empty_channel";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace guidewave
