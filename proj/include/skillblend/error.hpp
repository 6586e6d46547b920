#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace skillblend {

enum class ErrorCode {
  invalid_input,
  roster,
  parse,
  protocol,
  backend_unavailable,
  episode_abort,
  config,
  io,
  startup,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid input";
    case ErrorCode::roster: return "roster error";
    case ErrorCode::parse: return "parse error";
    case ErrorCode::protocol: return "protocol error";
    case ErrorCode::backend_unavailable: return "backend unavailable";
    case ErrorCode::episode_abort: return "episode aborted";
    case ErrorCode::config: return "configuration error";
    case ErrorCode::io: return "i/o error";
    case ErrorCode::startup: return "startup error";
  }
  return "error";
}

// Single exception type for the library. `detail` carries the raw payload for
// protocol errors and is empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  // Same error, with `context` prepended to the message.
  Error with_context(const std::string& context) const {
    return Error(code_, context + ": " + what(), detail_);
  }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace skillblend
