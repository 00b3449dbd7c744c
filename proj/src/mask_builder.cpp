#include "trace_gauge/mask_builder.hpp"

#include <stdexcept>

#include "trace_gauge/error.hpp"
#include "trace_gauge/text.hpp"

namespace trace_gauge {

MaskSet MaskSet::parse(std::string_view list) {
  MaskSet out;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto item = text::trim(list.substr(pos, comma == std::string_view::npos ? list.npos : comma - pos));
    if (item == "prompt") {
      out = out | prompt();
    } else if (item == "think") {
      out = out | think();
    } else if (!item.empty() && item != "none") {
      throw std::invalid_argument("unknown mask flag \"" + std::string(item) + "\"");
    }
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string MaskSet::to_string() const {
  if (contains(kPrompt) && contains(kThink)) return "prompt,think";
  if (contains(kPrompt)) return "prompt";
  if (contains(kThink)) return "think";
  return "";
}

std::vector<std::pair<std::size_t, std::size_t>> MaskedExample::segment_offsets() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(segments.size());
  std::size_t at = 0;
  for (const auto& s : segments) {
    const std::size_t len = text::code_point_count(s.text);
    out.emplace_back(at, at + len);
    at += len;
  }
  return out;
}

std::vector<bool> MaskedExample::character_mask() const {
  std::vector<bool> out;
  for (const auto& s : segments) out.insert(out.end(), text::code_point_count(s.text), s.masked);
  return out;
}

std::string strategy_name(MaskSet mask, MissingReasoning format) {
  const bool p = mask.contains(MaskSet::kPrompt);
  const bool t = mask.contains(MaskSet::kThink);
  if (p && t) return "response-only";
  if (t) return "masked-think";
  if (p) return "prompt-masked";
  return format == MissingReasoning::EmptyThink ? "empty-think" : "no-think";
}

MaskedExample build_masked_example(const Conversation& conv, const FormatProfile& profile, MaskSet mask,
                                   std::optional<MissingPolicy> policy) {
  const MissingPolicy resolved_policy =
      policy.value_or(mask.contains(MaskSet::kThink) ? MissingPolicy::EmptyThink : MissingPolicy::ProfileDefault);
  RenderedExample rendered = render_training_example(conv, profile, resolved_policy);

  MaskedExample out;
  out.text = std::move(rendered.text);
  out.segments = std::move(rendered.segments);
  out.turn_begin = rendered.turn_begin;

  MissingReasoning format = profile.missing_reasoning_default;
  if (resolved_policy == MissingPolicy::EmptyThink) format = MissingReasoning::EmptyThink;
  if (resolved_policy == MissingPolicy::NoThink) format = MissingReasoning::NoThink;
  out.strategy_name = strategy_name(mask, format);

  const bool mask_prompt = mask.contains(MaskSet::kPrompt);
  const bool mask_think = mask.contains(MaskSet::kThink);
  for (std::size_t i = 0; i < out.segments.size(); ++i) {
    auto& seg = out.segments[i];
    switch (seg.kind) {
      case SegmentKind::ThinkOpen:
      case SegmentKind::ThinkBody:
      case SegmentKind::ThinkClose:
        seg.masked = mask_think;
        break;
      case SegmentKind::Prompt:
        seg.masked = mask_prompt;
        break;
      case SegmentKind::TemplateGlue:
        // History markers and the assistant-open marker; never the closing glue.
        seg.masked = mask_prompt && i <= out.turn_begin;
        break;
      case SegmentKind::Response:
        seg.masked = false;
        break;
    }
  }
  return out;
}

std::vector<TokenLabel> project_to_tokens(const MaskedExample& example, const TokenAlignment& align) {
  const std::vector<bool> chars = example.character_mask();
  std::vector<TokenLabel> out;
  out.reserve(align.token_spans.size());
  std::size_t expected = 0;
  for (std::size_t t = 0; t < align.token_spans.size(); ++t) {
    const auto [begin, end] = align.token_spans[t];
    if (begin != expected || end < begin || end > chars.size()) {
      throw Error(ErrorCode::AlignmentMismatch,
                  "token " + std::to_string(t) + " span [" + std::to_string(begin) + ", " +
                      std::to_string(end) + ") does not continue the tiling at " + std::to_string(expected));
    }
    bool masked = false;
    for (std::size_t c = begin; c < end && !masked; ++c) masked = chars[c];
    out.push_back(masked ? TokenLabel::Masked : TokenLabel::Supervised);
    expected = end;
  }
  if (expected != chars.size()) {
    throw Error(ErrorCode::AlignmentMismatch, "token spans cover " + std::to_string(expected) + " of " +
                                                  std::to_string(chars.size()) + " characters");
  }
  return out;
}

}  // namespace trace_gauge
