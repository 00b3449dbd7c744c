#pragma once

// Final-answer extraction and permissive equivalence.
//
// Normalization pipeline (applied in order):
//   1. trim whitespace; map U+2212 to '-'
//   2. unwrap surrounding $...$ / $$...$$, a whole-text \boxed{...}, and
//      balanced outer braces, repeatedly
//   3. drop trailing '.' and then trailing '%'
//   4. drop a leading currency sign ("$" or "\$") in front of a number
//   5. numeric text (integer, decimal, a/b, \frac{a}{b}, with optional sign
//      and 3-digit comma grouping) becomes an exact rational
//   6. otherwise lowercase and collapse internal whitespace; a lone letter,
//      optionally parenthesized, becomes an uppercase choice label
//
// Rationals compare exactly; there is no floating tolerance anywhere.

#include <optional>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

#include "trace_gauge/trace_parser.hpp"

namespace trace_gauge {

using Rational = boost::multiprecision::cpp_rational;

struct CanonicalAnswer {
  std::optional<Rational> number;
  /// Canonical text: "n" or "n/d" in lowest terms for numbers, the
  /// normalized string otherwise.
  std::string text;

  bool operator==(const CanonicalAnswer& other) const;
};

/// Brace-balanced content of the last \boxed{...}; nullopt when there is none
/// or its braces never balance.
std::optional<std::string> extract_boxed(std::string_view answer_text);

CanonicalAnswer normalize_answer(std::string_view text);

/// Exact rational parse of a numeric-looking string (after the trimming and
/// separator rules above); nullopt when the text is not a number.
std::optional<Rational> parse_number(std::string_view text);

bool answers_equivalent(std::string_view pred, std::string_view gold);

/// Last standalone numeric token in free text, e.g. "so 1,200 apples" -> "1,200".
std::optional<std::string> last_numeric_token(std::string_view text);

struct AnswerMatch {
  bool correct = false;
  std::optional<std::string> extracted;  // canonical text of the compared candidate
};

/// Permissive check of a free-form answer against gold. A \boxed{} answer is
/// decisive when present; otherwise the whole answer text is compared, then
/// its last numeric token.
AnswerMatch match_answer(std::string_view answer_text, std::string_view gold);

struct ResponseScore {
  bool answered = false;
  bool correct = false;
  std::optional<std::string> extracted;
  TraceStatus status = TraceStatus::Missing;

  bool operator==(const ResponseScore&) const = default;
};

/// Exactly one of gold / external_result must be supplied, otherwise
/// Error(ScoringInputConflict). Truncated responses are never answered.
ResponseScore score_response(const ParsedResponse& parsed, const std::optional<std::string>& gold,
                             const std::optional<bool>& external_result);

}  // namespace trace_gauge
