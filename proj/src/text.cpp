#include "trace_gauge/text.hpp"

#include <array>
#include <charconv>

#include "trace_gauge/error.hpp"

namespace trace_gauge {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownProfile: return "UnknownProfile";
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::InvalidConversation: return "InvalidConversation";
    case ErrorCode::SteeringUnsupported: return "SteeringUnsupported";
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::ScoringInputConflict: return "ScoringInputConflict";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BadLevel: return "BadLevel";
    case ErrorCode::AlignmentMismatch: return "AlignmentMismatch";
    case ErrorCode::SubsetTooLarge: return "SubsetTooLarge";
    case ErrorCode::MixedSteps: return "MixedSteps";
    case ErrorCode::DuplicateStep: return "DuplicateStep";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
  }
  return "Unknown";
}

namespace text {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim_left(std::string_view s) noexcept {
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  return s.substr(i);
}

std::string_view trim(std::string_view s) noexcept {
  s = trim_left(s);
  std::size_t end = s.size();
  while (end > 0 && is_space(s[end - 1])) --end;
  return s.substr(0, end);
}

namespace {
bool is_continuation(char c) noexcept {
  return (static_cast<unsigned char>(c) & 0xC0U) == 0x80U;
}
}  // namespace

std::size_t code_point_count(std::string_view s) noexcept {
  std::size_t n = 0;
  for (char c : s) {
    if (!is_continuation(c)) ++n;
  }
  return n;
}

std::vector<std::size_t> byte_to_code_point_offsets(std::string_view s) {
  std::vector<std::size_t> offsets(s.size() + 1);
  std::size_t cp = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!is_continuation(s[i])) {
      offsets[i] = cp++;
    } else {
      // Inside a multi-byte sequence: belongs to the code point already started.
      offsets[i] = cp == 0 ? 0 : cp - 1;
    }
  }
  offsets[s.size()] = cp;
  return offsets;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf.data(), end);
}

}  // namespace text
}  // namespace trace_gauge
