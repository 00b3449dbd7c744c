#include "trace_gauge/answer_check.hpp"

#include <cctype>

#include "trace_gauge/error.hpp"
#include "trace_gauge/text.hpp"

namespace trace_gauge {

namespace {

using boost::multiprecision::cpp_int;

constexpr std::string_view kBoxed = "\\boxed{";
constexpr std::string_view kFrac = "\\frac{";
constexpr std::string_view kUnicodeMinus = "\xE2\x88\x92";

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_alpha(char c) noexcept { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool starts_with(std::string_view s, std::string_view prefix) noexcept {
  return s.substr(0, prefix.size()) == prefix;
}
bool ends_with(std::string_view s, std::string_view suffix) noexcept {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Position one past the '}' matching the '{' at `open`, or npos.
std::size_t match_brace(std::string_view s, std::size_t open) noexcept {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '{') {
      ++depth;
    } else if (s[i] == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

// Strips wrappers that never change the value. Returns true if anything changed.
bool unwrap_once(std::string_view& s) {
  if (s.size() >= 4 && starts_with(s, "$$") && ends_with(s, "$$")) {
    s = text::trim(s.substr(2, s.size() - 4));
    return true;
  }
  if (s.size() >= 2 && s.front() == '$' && s.back() == '$') {
    s = text::trim(s.substr(1, s.size() - 2));
    return true;
  }
  if (starts_with(s, kBoxed) && match_brace(s, kBoxed.size() - 1) == s.size()) {
    s = text::trim(s.substr(kBoxed.size(), s.size() - kBoxed.size() - 1));
    return true;
  }
  if (!s.empty() && s.front() == '{' && match_brace(s, 0) == s.size()) {
    s = text::trim(s.substr(1, s.size() - 2));
    return true;
  }
  if (!s.empty() && s.back() == '.') {
    while (!s.empty() && s.back() == '.') s.remove_suffix(1);
    s = text::trim(s);
    return true;
  }
  if (!s.empty() && s.back() == '%') {
    s.remove_suffix(1);
    s = text::trim(s);
    return true;
  }
  return false;
}

cpp_int pow10(std::size_t k) {
  cpp_int r = 1;
  for (std::size_t i = 0; i < k; ++i) r *= 10;
  return r;
}

// Unsigned decimal with optional 3-digit comma grouping: "12", "1,234.5", ".5".
std::optional<Rational> parse_unsigned_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  const auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (dot != std::string_view::npos && frac.empty()) return std::nullopt;
  if (whole.empty() && frac.empty()) return std::nullopt;

  std::string digits;
  if (whole.find(',') != std::string_view::npos) {
    // First group 1-3 digits, then ",ddd" groups.
    const auto first = whole.find(',');
    if (first == 0 || first > 3) return std::nullopt;
    for (std::size_t i = first; i < whole.size(); i += 4) {
      if (whole[i] != ',' || i + 4 > whole.size()) return std::nullopt;
    }
    for (char c : whole) {
      if (c == ',') continue;
      if (!is_digit(c)) return std::nullopt;
      digits += c;
    }
  } else {
    for (char c : whole) {
      if (!is_digit(c)) return std::nullopt;
    }
    digits = std::string(whole);
  }
  for (char c : frac) {
    if (!is_digit(c)) return std::nullopt;
  }

  cpp_int numerator = digits.empty() ? cpp_int(0) : cpp_int(digits);
  const cpp_int scale = pow10(frac.size());
  numerator *= scale;
  if (!frac.empty()) numerator += cpp_int(std::string(frac));
  return Rational(numerator, scale);
}

std::optional<Rational> parse_signed(std::string_view s);

std::optional<Rational> parse_frac(std::string_view s) {
  if (!starts_with(s, kFrac)) return std::nullopt;
  const auto num_end = match_brace(s, kFrac.size() - 1);
  if (num_end == std::string_view::npos || num_end >= s.size() || s[num_end] != '{') {
    return std::nullopt;
  }
  const auto den_end = match_brace(s, num_end);
  if (den_end != s.size()) return std::nullopt;
  const auto num = parse_signed(text::trim(s.substr(kFrac.size(), num_end - 1 - kFrac.size())));
  const auto den = parse_signed(text::trim(s.substr(num_end + 1, den_end - num_end - 2)));
  if (!num || !den || *den == 0) return std::nullopt;
  return *num / *den;
}

std::optional<Rational> parse_signed(std::string_view s) {
  s = text::trim(s);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s = text::trim(s.substr(1));
  }
  std::optional<Rational> value;
  if (starts_with(s, kFrac)) {
    value = parse_frac(s);
  } else if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const auto num = parse_unsigned_decimal(s.substr(0, slash));
    const auto den = parse_unsigned_decimal(s.substr(slash + 1));
    if (num && den && *den != 0) value = *num / *den;
  } else {
    value = parse_unsigned_decimal(s);
  }
  if (value && negative) *value = -*value;
  return value;
}

std::string canonical_text(const Rational& r) {
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

std::string normalize_text(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : s) {
    if (text::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (out.size() == 1 && is_alpha(out[0])) {
    out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  } else if (out.size() == 3 && out[0] == '(' && is_alpha(out[1]) && out[2] == ')') {
    out = std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(out[1]))));
  }
  return out;
}

}  // namespace

bool CanonicalAnswer::operator==(const CanonicalAnswer& other) const {
  if (number.has_value() != other.number.has_value()) return false;
  if (number) return *number == *other.number;
  return text == other.text;
}

std::optional<std::string> extract_boxed(std::string_view answer_text) {
  const auto pos = answer_text.rfind(kBoxed);
  if (pos == std::string_view::npos) return std::nullopt;
  const auto open = pos + kBoxed.size() - 1;
  const auto end = match_brace(answer_text, open);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(answer_text.substr(open + 1, end - open - 2));
}

std::optional<Rational> parse_number(std::string_view text) {
  return parse_signed(text);
}

CanonicalAnswer normalize_answer(std::string_view input) {
  const std::string cleaned = replace_all(std::string(input), kUnicodeMinus, "-");
  std::string_view s = text::trim(cleaned);
  while (unwrap_once(s)) {
  }

  std::string_view numeric = s;
  if (starts_with(numeric, "\\$")) {
    numeric = text::trim(numeric.substr(2));
  } else if (starts_with(numeric, "$")) {
    numeric = text::trim(numeric.substr(1));
  }
  if (auto value = parse_signed(numeric)) {
    CanonicalAnswer out;
    out.text = canonical_text(*value);
    out.number = std::move(value);
    return out;
  }
  return {std::nullopt, normalize_text(s)};
}

bool answers_equivalent(std::string_view pred, std::string_view gold) {
  return normalize_answer(pred) == normalize_answer(gold);
}

std::optional<std::string> last_numeric_token(std::string_view s) {
  std::optional<std::string> last;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i]) || (i > 0 && (is_digit(s[i - 1]) || s[i - 1] == ',' || s[i - 1] == '.'))) {
      ++i;
      continue;
    }
    std::size_t begin = i;
    if (begin > 0 && s[begin - 1] == '-' && (begin == 1 || !std::isalnum(static_cast<unsigned char>(s[begin - 2])))) {
      --begin;
    }
    std::size_t j = i;
    while (j < s.size() && is_digit(s[j])) ++j;
    // Comma groups only when the leading run has at most three digits.
    if (j - i <= 3) {
      while (j + 3 < s.size() && s[j] == ',' && is_digit(s[j + 1]) && is_digit(s[j + 2]) &&
             is_digit(s[j + 3]) && (j + 4 == s.size() || !is_digit(s[j + 4]))) {
        j += 4;
      }
    }
    if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
      ++j;
      while (j < s.size() && is_digit(s[j])) ++j;
    }
    if (j + 1 < s.size() && s[j] == '/' && is_digit(s[j + 1])) {
      ++j;
      while (j < s.size() && is_digit(s[j])) ++j;
    }
    last = std::string(s.substr(begin, j - begin));
    i = j;
  }
  return last;
}

AnswerMatch match_answer(std::string_view answer_text, std::string_view gold) {
  const auto expected = normalize_answer(gold);
  if (const auto boxed = extract_boxed(answer_text)) {
    auto got = normalize_answer(*boxed);
    return {got == expected, got.text};
  }
  auto whole = normalize_answer(answer_text);
  if (whole == expected) return {true, whole.text};
  if (const auto token = last_numeric_token(answer_text)) {
    auto got = normalize_answer(*token);
    return {got == expected, got.text};
  }
  return {false, whole.text};
}

ResponseScore score_response(const ParsedResponse& parsed, const std::optional<std::string>& gold,
                             const std::optional<bool>& external_result) {
  if (gold.has_value() == external_result.has_value()) {
    throw Error(ErrorCode::ScoringInputConflict,
                "exactly one of gold or external_result must be supplied");
  }
  ResponseScore out;
  out.status = parsed.status;
  if (parsed.status == TraceStatus::Truncated || !parsed.answer) return out;

  out.answered = !text::trim(*parsed.answer).empty();
  if (external_result) {
    out.correct = out.answered && *external_result;
    return out;
  }
  if (!out.answered) return out;
  auto match = match_answer(*parsed.answer, *gold);
  out.correct = match.correct;
  out.extracted = std::move(match.extracted);
  return out;
}

}  // namespace trace_gauge
