#include "trace_gauge/chat_render.hpp"

namespace trace_gauge {

std::string_view to_string(Role r) noexcept {
  switch (r) {
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::System: return "system";
  }
  return "user";
}

Role role_from_string(std::string_view s) {
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  if (s == "system") return Role::System;
  throw Error(ErrorCode::InvalidConversation, "unknown role \"" + std::string(s) + "\"");
}

std::string_view to_string(SegmentKind k) noexcept {
  switch (k) {
    case SegmentKind::Prompt: return "prompt";
    case SegmentKind::TemplateGlue: return "template_glue";
    case SegmentKind::ThinkOpen: return "think_open";
    case SegmentKind::ThinkBody: return "think_body";
    case SegmentKind::ThinkClose: return "think_close";
    case SegmentKind::Response: return "response";
  }
  return "prompt";
}

std::string concat_segments(const std::vector<Segment>& segments) {
  std::string out;
  for (const auto& s : segments) out += s.text;
  return out;
}

namespace {

class Builder {
 public:
  void add(SegmentKind kind, std::string text) {
    if (text.empty()) return;
    out_.text += text;
    out_.segments.push_back({kind, std::move(text), false});
  }

  void mark_turn_begin() { out_.turn_begin = out_.segments.size(); }

  RenderedExample finish() && { return std::move(out_); }

 private:
  RenderedExample out_;
};

const RoleMarker& marker_for(const FormatProfile& p, Role r) {
  switch (r) {
    case Role::User: return p.role_markers.user;
    case Role::Assistant: return p.role_markers.assistant;
    case Role::System: return p.role_markers.system;
  }
  return p.role_markers.user;
}

void emit_message(Builder& b, const FormatProfile& p, const Message& m) {
  const auto& marker = marker_for(p, m.role);
  b.add(SegmentKind::TemplateGlue, marker.open);
  std::string body;
  if (m.reasoning) body = p.think_open + *m.reasoning + p.think_close;
  body += m.content;
  b.add(SegmentKind::Prompt, std::move(body));
  b.add(SegmentKind::TemplateGlue, marker.close);
}

// System messages render ahead of every other turn, in their original order.
void emit_history(Builder& b, const FormatProfile& p, const std::vector<Message>& messages,
                  std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    if (messages[i].role == Role::System) emit_message(b, p, messages[i]);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (messages[i].role != Role::System) emit_message(b, p, messages[i]);
  }
}

MissingReasoning resolve(MissingPolicy policy, const FormatProfile& p) {
  switch (policy) {
    case MissingPolicy::EmptyThink: return MissingReasoning::EmptyThink;
    case MissingPolicy::NoThink: return MissingReasoning::NoThink;
    case MissingPolicy::ProfileDefault: return p.missing_reasoning_default;
  }
  return p.missing_reasoning_default;
}

}  // namespace

void validate_conversation(const Conversation& conv) {
  if (conv.messages.empty()) {
    throw Error(ErrorCode::InvalidConversation, "conversation has no messages");
  }
  for (std::size_t i = 0; i < conv.messages.size(); ++i) {
    const auto& m = conv.messages[i];
    if (m.reasoning && m.role != Role::Assistant) {
      throw Error(ErrorCode::InvalidConversation,
                  "message " + std::to_string(i) + " carries reasoning but is not an assistant turn");
    }
  }
}

RenderedExample render_prompt(const Conversation& conv, const FormatProfile& profile,
                              const std::optional<std::string>& think_prefix,
                              const std::optional<std::string>& response_prefix) {
  validate_conversation(conv);
  if (conv.messages.back().role == Role::Assistant) {
    throw Error(ErrorCode::InvalidConversation,
                "an inference prompt must end with a user or system message");
  }
  const bool steering = think_prefix.has_value() || response_prefix.has_value();

  Builder b;
  emit_history(b, profile, conv.messages, conv.messages.size());
  b.mark_turn_begin();

  const std::string& suffix = profile.generation_suffix;
  if (profile.implicit_open) {
    const auto pos = suffix.find(profile.think_open);
    const std::string tail = suffix.substr(pos + profile.think_open.size());
    if (steering && !tail.empty()) {
      throw Error(ErrorCode::SteeringUnsupported,
                  "generation suffix continues past the implied think_open");
    }
    b.add(SegmentKind::TemplateGlue, suffix.substr(0, pos));
    b.add(SegmentKind::ThinkOpen, profile.think_open);
    b.add(SegmentKind::TemplateGlue, tail);
  } else {
    if (steering && suffix.find(profile.think_open) != std::string::npos) {
      throw Error(ErrorCode::SteeringUnsupported,
                  "generation suffix already contains think_open but the profile is not prefixed");
    }
    b.add(SegmentKind::TemplateGlue, suffix);
    if (steering) b.add(SegmentKind::ThinkOpen, profile.think_open);
  }

  if (think_prefix) b.add(SegmentKind::ThinkBody, *think_prefix);
  if (response_prefix) {
    b.add(SegmentKind::ThinkClose, profile.think_close);
    b.add(SegmentKind::Response, *response_prefix);
  }
  return std::move(b).finish();
}

RenderedExample render_training_example(const Conversation& conv, const FormatProfile& profile,
                                        MissingPolicy policy) {
  validate_conversation(conv);
  const auto& target = conv.messages.back();
  if (target.role != Role::Assistant) {
    throw Error(ErrorCode::MissingTarget, "final message is not an assistant turn");
  }

  Builder b;
  emit_history(b, profile, conv.messages, conv.messages.size() - 1);
  b.mark_turn_begin();
  b.add(SegmentKind::TemplateGlue, profile.role_markers.assistant.open);

  if (target.reasoning && !target.reasoning->empty()) {
    b.add(SegmentKind::ThinkOpen, profile.think_open + "\n");
    b.add(SegmentKind::ThinkBody, *target.reasoning);
    b.add(SegmentKind::ThinkClose, "\n" + profile.think_close + "\n");
  } else if (resolve(policy, profile) == MissingReasoning::EmptyThink) {
    b.add(SegmentKind::ThinkOpen, profile.think_open);
    b.add(SegmentKind::ThinkClose, profile.think_close);
  }

  b.add(SegmentKind::Response, target.content);
  b.add(SegmentKind::TemplateGlue, profile.role_markers.assistant.close);
  return std::move(b).finish();
}

std::string assistant_turn_slice(const RenderedExample& example, const FormatProfile& profile) {
  const auto& segs = example.segments;
  if (segs.size() < example.turn_begin + 2) return {};
  std::size_t first = example.turn_begin + 1;
  const std::size_t last = segs.size() - 1;
  if (profile.implicit_open && first < last && segs[first].kind == SegmentKind::ThinkOpen) ++first;
  std::string out;
  for (std::size_t i = first; i < last; ++i) out += segs[i].text;
  return out;
}

}  // namespace trace_gauge
