#include "trace_gauge/trace_parser.hpp"

#include <algorithm>
#include <thread>

#include "trace_gauge/text.hpp"

namespace trace_gauge {

std::string_view to_string(TraceStatus s) noexcept {
  switch (s) {
    case TraceStatus::Valid: return "valid";
    case TraceStatus::Empty: return "empty";
    case TraceStatus::Missing: return "missing";
    case TraceStatus::Truncated: return "truncated";
  }
  return "missing";
}

std::optional<TraceStatus> status_from_string(std::string_view s) noexcept {
  if (s == "valid") return TraceStatus::Valid;
  if (s == "empty") return TraceStatus::Empty;
  if (s == "missing") return TraceStatus::Missing;
  if (s == "truncated") return TraceStatus::Truncated;
  return std::nullopt;
}

ParsedResponse parse_response(std::string_view text, const FormatProfile& profile) {
  ParsedResponse out;
  out.raw_length = text::code_point_count(text);

  std::size_t body_begin = 0;
  if (!profile.implicit_open) {
    const auto open = text.find(profile.think_open);
    if (open != std::string_view::npos) {
      body_begin = open + profile.think_open.size();
    } else if (profile.tolerate_unopened_close &&
               text.find(profile.think_close) != std::string_view::npos) {
      body_begin = 0;
    } else {
      out.status = TraceStatus::Missing;
      out.answer = std::string(text);
      return out;
    }
  }

  const auto close = text.find(profile.think_close, body_begin);
  if (close == std::string_view::npos) {
    out.status = TraceStatus::Truncated;
    out.reasoning = std::string(text::trim(text.substr(body_begin)));
    return out;
  }

  const auto body = text::trim(text.substr(body_begin, close - body_begin));
  out.status = body.empty() ? TraceStatus::Empty : TraceStatus::Valid;
  out.reasoning = std::string(body);
  out.answer = std::string(text::trim_left(text.substr(close + profile.think_close.size())));
  return out;
}

std::vector<ParsedResponse> parse_batch(const std::vector<std::string>& texts,
                                        const FormatProfile& profile, unsigned jobs) {
  std::vector<ParsedResponse> out(texts.size());
  const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(texts.size(), 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = parse_response(texts[i], profile);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < texts.size(); i += workers) {
        out[i] = parse_response(texts[i], profile);
      }
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

std::optional<std::string> extract_teacher_trace(std::string_view teacher_text) {
  constexpr std::string_view kOpen = "<reasoning_steps>";
  constexpr std::string_view kClose = "</reasoning_steps>";
  constexpr std::string_view kLead = "Okay, ";

  const auto open = teacher_text.find(kOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const auto begin = open + kOpen.size();
  const auto close = teacher_text.find(kClose, begin);
  if (close == std::string_view::npos) return std::nullopt;

  const auto body = text::trim(teacher_text.substr(begin, close - begin));
  if (body.substr(0, kLead.size()) != kLead) return std::nullopt;
  return std::string(body);
}

}  // namespace trace_gauge
