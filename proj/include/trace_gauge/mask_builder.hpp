#pragma once

// Loss-mask annotations over rendered training examples.
//
// Masking happens in character space (Unicode code points) on the rendered
// segments. Callers that own a tokenizer project the result onto their token
// boundaries with project_to_tokens.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trace_gauge/chat_render.hpp"

namespace trace_gauge {

class MaskSet {
 public:
  enum Flag : unsigned { kPrompt = 1U, kThink = 2U };

  constexpr MaskSet() = default;
  constexpr MaskSet(Flag f) : bits_(f) {}

  static constexpr MaskSet none() { return {}; }
  static constexpr MaskSet prompt() { return {kPrompt}; }
  static constexpr MaskSet think() { return {kThink}; }

  /// Parses a comma-joined flag list such as "prompt,think". Empty text is
  /// the empty set; unknown names throw std::invalid_argument.
  static MaskSet parse(std::string_view text);

  constexpr bool contains(Flag f) const { return (bits_ & f) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr unsigned bits() const { return bits_; }

  friend constexpr MaskSet operator|(MaskSet a, MaskSet b) { return MaskSet(a.bits_ | b.bits_); }
  friend constexpr bool operator==(MaskSet a, MaskSet b) { return a.bits_ == b.bits_; }

  /// "prompt,think", "think", "" and so on, in canonical order.
  std::string to_string() const;

 private:
  constexpr explicit MaskSet(unsigned bits) : bits_(bits) {}
  unsigned bits_ = 0;
};

struct MaskedExample {
  std::string text;
  std::vector<Segment> segments;
  std::size_t turn_begin = 0;
  std::string strategy_name;

  /// Half-open code point range of each segment.
  std::vector<std::pair<std::size_t, std::size_t>> segment_offsets() const;

  /// One flag per code point of text.
  std::vector<bool> character_mask() const;

  bool operator==(const MaskedExample&) const = default;
};

/// Strategy name for a mask under a resolved missing-reasoning format:
/// "no-think", "empty-think", "masked-think", "prompt-masked", "response-only".
std::string strategy_name(MaskSet mask, MissingReasoning format);

/// Renders the training example and sets mask bits. The missing-reasoning
/// policy defaults to EmptyThink when THINK is in the mask and to the profile
/// default otherwise.
MaskedExample build_masked_example(const Conversation& conv, const FormatProfile& profile, MaskSet mask,
                                   std::optional<MissingPolicy> policy = std::nullopt);

/// Half-open code point spans, one per token. Must tile [0, length) in order;
/// zero-width spans are allowed.
struct TokenAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> token_spans;
};

enum class TokenLabel { Supervised = 0, Masked = 1 };

/// A token is masked when any code point in its span is masked. Throws
/// AlignmentMismatch when the spans do not tile the text.
std::vector<TokenLabel> project_to_tokens(const MaskedExample& example, const TokenAlignment& align);

}  // namespace trace_gauge
