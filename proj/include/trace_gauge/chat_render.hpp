#pragma once

// Renders conversations into prompt text or segmented training targets.
//
// Every render returns both the flat text and an ordered list of typed
// segments whose concatenation is byte-identical to the text. Downstream
// masking works on the segments; nothing ever re-scans the text.
//
// Layout of a final assistant turn in a training example:
//
//   <assistant.open> ThinkOpen ThinkBody ThinkClose Response <assistant.close>
//
// With a non-empty body the delimiters carry one newline on their inner side
// ("<think>\n", "\n</think>\n"); an empty block is the bare delimiter pair so
// the parser sees byte-adjacent tags. History turns (everything before the
// final assistant turn) are emitted as Prompt text and TemplateGlue markers,
// with assistant reasoning embedded compactly as <think>r</think>a.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trace_gauge/format_profile.hpp"

namespace trace_gauge {

enum class Role { User, Assistant, System };

std::string_view to_string(Role r) noexcept;
Role role_from_string(std::string_view s);  // throws InvalidConversation

struct Message {
  Role role = Role::User;
  std::string content;
  std::optional<std::string> reasoning;  // assistant only

  bool operator==(const Message&) const = default;
};

struct Conversation {
  std::vector<Message> messages;

  bool operator==(const Conversation&) const = default;
};

enum class SegmentKind { Prompt, TemplateGlue, ThinkOpen, ThinkBody, ThinkClose, Response };

std::string_view to_string(SegmentKind k) noexcept;

struct Segment {
  SegmentKind kind = SegmentKind::Prompt;
  std::string text;
  bool masked = false;

  bool operator==(const Segment&) const = default;
};

struct RenderedExample {
  std::string text;
  std::vector<Segment> segments;
  /// Index of the segment that opens the final assistant turn (training
  /// examples) or the generation suffix (prompts). Everything before it is
  /// conversation history.
  std::size_t turn_begin = 0;
};

enum class MissingPolicy { EmptyThink, NoThink, ProfileDefault };

/// Throws InvalidConversation when the conversation is empty or a
/// non-assistant message carries reasoning.
void validate_conversation(const Conversation& conv);

/// Inference prompt ending with the profile's generation suffix, optionally
/// followed by a steering prefix for the reasoning block and/or the answer.
///
/// Throws InvalidConversation when the last message is an assistant turn, and
/// SteeringUnsupported when steering is requested but the profile's suffix
/// already contains text the steering would have to precede.
RenderedExample render_prompt(const Conversation& conv, const FormatProfile& profile,
                              const std::optional<std::string>& think_prefix = std::nullopt,
                              const std::optional<std::string>& response_prefix = std::nullopt);

/// Full training example whose final message is the assistant target.
/// Throws MissingTarget when the final message is not an assistant turn.
RenderedExample render_training_example(const Conversation& conv, const FormatProfile& profile,
                                        MissingPolicy policy = MissingPolicy::ProfileDefault);

/// Text the model is expected to generate for the final assistant turn: the
/// segments after the assistant opening marker and before its closing marker,
/// minus the opening delimiter when the profile's template supplies it.
std::string assistant_turn_slice(const RenderedExample& example, const FormatProfile& profile);

std::string concat_segments(const std::vector<Segment>& segments);

}  // namespace trace_gauge
