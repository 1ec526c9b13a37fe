#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mft {

enum class ErrorCode {
  kInvalidArgument,
  kParse,
  kSchema,
  kDimensionMismatch,
  kDuplicateId,
  kUnknownLabel,
  kNumeric,
  kNonDeterministic,
  kIo,
  kVersionMismatch,
  kIntegrity,
  kHttp,
  kAuth,
  kRetryExhausted,
  kMissingCredential,
};

std::string_view to_string(ErrorCode code);

/// Single exception type used across the library. The code is stable and is
/// what the CLI reports in its machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Warnings go through a process-wide sink (stderr by default). Tests install
// a capturing handler.
using WarningHandler = std::function<void(std::string_view)>;

void warn(std::string_view message);
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace mft
