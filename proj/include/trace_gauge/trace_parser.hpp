#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trace_gauge/format_profile.hpp"

namespace trace_gauge {

enum class TraceStatus { Valid, Empty, Missing, Truncated };

std::string_view to_string(TraceStatus s) noexcept;
std::optional<TraceStatus> status_from_string(std::string_view s) noexcept;

/// A generation split into reasoning and answer with exactly one status.
///
///   Valid     reasoning non-empty after trim, answer present (may be "")
///   Empty     reasoning "" , answer present
///   Missing   reasoning absent, answer is the full generation
///   Truncated answer absent, reasoning holds the partial body
struct ParsedResponse {
  std::optional<std::string> reasoning;
  std::optional<std::string> answer;
  TraceStatus status = TraceStatus::Missing;
  std::size_t raw_length = 0;  // code points

  bool has_valid_reasoning() const noexcept { return status == TraceStatus::Valid; }
  bool has_empty_reasoning() const noexcept { return status == TraceStatus::Empty; }
  bool has_missing_reasoning() const noexcept { return status == TraceStatus::Missing; }
  bool has_truncated_reasoning() const noexcept { return status == TraceStatus::Truncated; }

  bool operator==(const ParsedResponse&) const = default;
};

/// Total: every input classifies. Only the first think_open and the first
/// think_close after it delimit reasoning; later delimiter text is answer text.
ParsedResponse parse_response(std::string_view text, const FormatProfile& profile);

/// Element-wise parse_response. With jobs > 1 the work fans out across
/// threads; output order always matches input order.
std::vector<ParsedResponse> parse_batch(const std::vector<std::string>& texts,
                                        const FormatProfile& profile, unsigned jobs = 1);

/// Reasoning from a teacher completion: the trimmed body of the first
/// <reasoning_steps>...</reasoning_steps> block, only if it starts with "Okay, ".
std::optional<std::string> extract_teacher_trace(std::string_view teacher_text);

}  // namespace trace_gauge
