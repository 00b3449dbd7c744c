#pragma once

// Small string helpers shared across modules.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace trace_gauge::text {

bool is_space(char c) noexcept;

std::string_view trim(std::string_view s) noexcept;
std::string_view trim_left(std::string_view s) noexcept;

/// Number of Unicode code points in a UTF-8 string. Malformed sequences count
/// one per non-continuation byte, so the function is total.
std::size_t code_point_count(std::string_view s) noexcept;

/// Maps every byte offset in [0, s.size()] to its code point offset.
std::vector<std::size_t> byte_to_code_point_offsets(std::string_view s);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) noexcept;

/// Shortest decimal text that round-trips the double exactly.
std::string format_double(double value);

}  // namespace trace_gauge::text
