#include "mft/error.hpp"

#include <iostream>
#include <mutex>

namespace mft {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kUnknownLabel: return "unknown_label";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kNonDeterministic: return "non_deterministic";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kVersionMismatch: return "version_mismatch";
    case ErrorCode::kIntegrity: return "integrity";
    case ErrorCode::kHttp: return "http";
    case ErrorCode::kAuth: return "auth";
    case ErrorCode::kRetryExhausted: return "retry_exhausted";
    case ErrorCode::kMissingCredential: return "missing_credential";
  }
  return "unknown";
}

namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& handler() {
  static WarningHandler h = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return h;
}

}  // namespace

void warn(std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (handler()) handler()(message);
}

WarningHandler set_warning_handler(WarningHandler h) {
  std::lock_guard lock(handler_mutex());
  auto previous = std::move(handler());
  handler() = std::move(h);
  return previous;
}

}  // namespace mft
