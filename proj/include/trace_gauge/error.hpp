#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trace_gauge {

enum class ErrorCode {
  UnknownProfile,
  MalformedDocument,
  ValidationFailed,
  InvalidConversation,
  SteeringUnsupported,
  MissingTarget,
  ScoringInputConflict,
  EmptyInput,
  BadLevel,
  AlignmentMismatch,
  SubsetTooLarge,
  MixedSteps,
  DuplicateStep,
  SeriesTooShort,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every contract failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace trace_gauge
