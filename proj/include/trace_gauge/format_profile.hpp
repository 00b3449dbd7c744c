#pragma once

// Declarative reasoning-format conventions. A FormatProfile tells the
// renderer which markers to emit and the parser which delimiters to look for,
// so neither needs model-specific code.

#include <string>
#include <string_view>
#include <vector>

#include "trace_gauge/error.hpp"

namespace trace_gauge {

enum class MissingReasoning { EmptyThink, NoThink };

std::string_view to_string(MissingReasoning m) noexcept;

struct RoleMarker {
  std::string open;
  std::string close;

  bool operator==(const RoleMarker&) const = default;
};

struct RoleMarkers {
  RoleMarker user;
  RoleMarker assistant;
  RoleMarker system;

  bool operator==(const RoleMarkers&) const = default;
};

struct FormatProfile {
  std::string name;
  std::string think_open;
  std::string think_close;
  /// The template itself emits think_open at the start of the assistant turn,
  /// so generations begin inside the reasoning block.
  bool implicit_open = false;
  RoleMarkers role_markers;
  /// Appended to an inference prompt to start the assistant turn.
  std::string generation_suffix;
  MissingReasoning missing_reasoning_default = MissingReasoning::NoThink;
  bool tolerate_unopened_close = false;

  bool operator==(const FormatProfile&) const = default;
};

struct ProfileViolation {
  std::string field_path;
  std::string message;

  bool operator==(const ProfileViolation&) const = default;
};

/// Raised by load_profile when a well-formed document breaches an invariant.
class ProfileValidationError : public Error {
 public:
  explicit ProfileValidationError(std::vector<ProfileViolation> violations);

  const std::vector<ProfileViolation>& violations() const noexcept { return violations_; }

 private:
  std::vector<ProfileViolation> violations_;
};

/// Names accepted by builtin_profile().
std::vector<std::string> builtin_profile_names();

/// Throws Error(UnknownProfile) for names outside builtin_profile_names().
FormatProfile builtin_profile(std::string_view name);

/// Parses a profile JSON document. Every key is required and unknown keys are
/// rejected (MalformedDocument); invariant breaches raise ProfileValidationError.
FormatProfile load_profile(std::string_view document);

/// Inverse of load_profile; output is a compact JSON object with stable key order.
std::string serialize_profile(const FormatProfile& profile);

/// One violation per breached invariant, sorted by field_path. Empty means valid.
std::vector<ProfileViolation> validate_profile(const FormatProfile& profile);

/// Builtin name, or else a path to a profile document.
FormatProfile resolve_profile(std::string_view name_or_path);

}  // namespace trace_gauge
