#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace freqsift {

enum class ErrorKind {
  InvalidParameter,
  InvalidInput,
  UnsupportedConfiguration,
  BackendError,
  NotFound,
  UndefinedInverse,
  DegenerateInput,
  IncompatibleModels,
  UndefinedEntropy,
  TooShort,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

// Single exception type for the library; callers branch on kind().
// Backend errors carry the raw payload that triggered them.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string payload = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        payload_(std::move(payload)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& payload() const noexcept { return payload_; }

 private:
  ErrorKind kind_;
  std::string payload_;
};

}  // namespace freqsift
