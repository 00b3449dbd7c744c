#include "trace_gauge/records.hpp"

#include "trace_gauge/error.hpp"
#include "trace_gauge/text.hpp"

namespace trace_gauge {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedDocument, what); }

const Json& require(const Json& doc, const char* key) {
  if (!doc.is_object()) malformed("record must be a JSON object");
  const auto it = doc.find(key);
  if (it == doc.end()) malformed(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const Json& doc, const char* key) {
  const Json& v = require(doc, key);
  if (!v.is_string()) malformed(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

bool require_bool(const Json& doc, const char* key) {
  const Json& v = require(doc, key);
  if (!v.is_boolean()) malformed(std::string("field \"") + key + "\" must be a boolean");
  return v.get<bool>();
}

std::size_t require_count(const Json& doc, const char* key) {
  const Json& v = require(doc, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    malformed(std::string("field \"") + key + "\" must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double require_number(const Json& doc, const char* key) {
  const Json& v = require(doc, key);
  if (!v.is_number()) malformed(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

std::optional<std::string> optional_string(const Json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(std::string("field \"") + key + "\" must be a string or null");
  return it->get<std::string>();
}

std::optional<double> optional_number(const Json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) malformed(std::string("field \"") + key + "\" must be a number or null");
  return it->get<double>();
}

template <typename T>
Json nullable(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json interval_to_json(const Interval& iv) {
  Json j;
  j["low"] = iv.low;
  j["high"] = iv.high;
  j["level"] = iv.level;
  j["method"] = iv.method;
  j["resamples"] = iv.resamples;
  j["seed"] = iv.seed;
  return j;
}

Interval interval_from_json(const Json& j) {
  Interval iv;
  iv.low = require_number(j, "low");
  iv.high = require_number(j, "high");
  iv.level = require_number(j, "level");
  if (auto m = optional_string(j, "method")) iv.method = *m;
  iv.resamples = require_count(j, "resamples");
  const Json& seed = require(j, "seed");
  if (!seed.is_number_integer()) malformed("field \"seed\" must be an integer");
  iv.seed = seed.get<std::uint64_t>();
  return iv;
}

}  // namespace

Conversation conversation_from_json(const Json& doc) {
  const Json& messages = require(doc, "messages");
  if (!messages.is_array()) malformed("field \"messages\" must be an array");
  Conversation conv;
  for (const auto& m : messages) {
    Message msg;
    msg.role = role_from_string(require_string(m, "role"));
    msg.content = require_string(m, "content");
    msg.reasoning = optional_string(m, "reasoning");
    conv.messages.push_back(std::move(msg));
  }
  return conv;
}

Json conversation_to_json(const Conversation& conv) {
  Json messages = Json::array();
  for (const auto& m : conv.messages) {
    Json j;
    j["role"] = std::string(to_string(m.role));
    j["content"] = m.content;
    if (m.reasoning) j["reasoning"] = *m.reasoning;
    messages.push_back(std::move(j));
  }
  Json out;
  out["messages"] = std::move(messages);
  return out;
}

Json rendered_to_json(const RenderedExample& example) {
  Json segments = Json::array();
  std::size_t at = 0;
  for (const auto& s : example.segments) {
    const std::size_t len = text::code_point_count(s.text);
    segments.push_back({{"kind", std::string(to_string(s.kind))}, {"start", at}, {"end", at + len}});
    at += len;
  }
  Json out;
  out["text"] = example.text;
  out["segments"] = std::move(segments);
  out["turn_begin"] = example.turn_begin;
  return out;
}

Json parsed_to_json(const ParsedResponse& parsed, const Json& id) {
  Json out;
  out["id"] = id;
  out["status"] = std::string(to_string(parsed.status));
  out["reasoning"] = nullable(parsed.reasoning);
  out["answer"] = nullable(parsed.answer);
  out["raw_length"] = parsed.raw_length;
  return out;
}

ParsedResponse parsed_from_json(const Json& doc) {
  ParsedResponse out;
  const auto status = status_from_string(require_string(doc, "status"));
  if (!status) malformed("unknown status \"" + doc.at("status").get<std::string>() + "\"");
  out.status = *status;
  out.reasoning = optional_string(doc, "reasoning");
  out.answer = optional_string(doc, "answer");
  if (doc.contains("raw_length")) out.raw_length = require_count(doc, "raw_length");
  return out;
}

Json scored_to_json(const ParsedResponse& parsed, const ResponseScore& score, const Json& id) {
  Json out = parsed_to_json(parsed, id);
  out["answered"] = score.answered;
  out["correct"] = score.correct;
  out["extracted"] = nullable(score.extracted);
  return out;
}

ResponseScore scored_from_json(const Json& doc) {
  ResponseScore out;
  out.status = parsed_from_json(doc).status;
  out.answered = require_bool(doc, "answered");
  out.correct = require_bool(doc, "correct");
  out.extracted = optional_string(doc, "extracted");
  return out;
}

RunRecord run_record_from_json(const Json& doc) {
  RunRecord r;
  r.generation = require_string(doc, "generation");
  if (const auto it = doc.find("id"); it != doc.end() && !it->is_null()) {
    r.id = it->is_string() ? it->get<std::string>() : it->dump();
  }
  r.task = optional_string(doc, "task").value_or("");
  r.prompt = optional_string(doc, "prompt").value_or("");
  r.gold = optional_string(doc, "gold");
  if (const auto it = doc.find("external_result"); it != doc.end() && !it->is_null()) {
    if (!it->is_boolean()) malformed("field \"external_result\" must be a boolean");
    r.external_result = it->get<bool>();
  }
  if (const auto it = doc.find("step"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_integer()) malformed("field \"step\" must be an integer");
    r.step = it->get<std::int64_t>();
  }
  return r;
}

Json run_record_to_json(const RunRecord& record) {
  Json out;
  out["id"] = record.id;
  out["task"] = record.task;
  out["prompt"] = record.prompt;
  out["generation"] = record.generation;
  if (record.gold) out["gold"] = *record.gold;
  if (record.external_result) out["external_result"] = *record.external_result;
  out["step"] = record.step;
  return out;
}

Json metrics_to_json(const EvalResult& r) {
  Json counts;
  counts["valid"] = r.stats.valid;
  counts["empty"] = r.stats.empty;
  counts["missing"] = r.stats.missing;
  counts["truncated"] = r.stats.truncated;
  counts["answered"] = r.stats.answered;
  counts["correct"] = nullable(r.correct);
  counts["correct_valid"] = nullable(r.correct_valid);

  Json rates;
  rates["vr"] = r.stats.valid_reasoning_rate();
  rates["er"] = r.stats.empty_reasoning_rate();
  rates["mr"] = r.stats.missing_reasoning_rate();
  rates["tr"] = r.stats.truncated_reasoning_rate();
  rates["answer_rate"] = r.stats.answer_rate();

  Json ci = Json::object();
  for (const char* name : kMetricNames) {
    if (const auto it = r.ci.find(name); it != r.ci.end()) ci[name] = interval_to_json(it->second);
  }

  Json out;
  out["n"] = r.stats.n;
  out["counts"] = std::move(counts);
  out["rates"] = std::move(rates);
  out["pass1"] = nullable(r.pass1);
  out["rpass1"] = nullable(r.rpass1);
  out["min_valid"] = r.min_valid_threshold;
  out["ci"] = std::move(ci);
  return out;
}

EvalResult metrics_from_json(const Json& doc) {
  EvalResult r;
  const Json& counts = require(doc, "counts");
  r.stats.n = require_count(doc, "n");
  r.stats.valid = require_count(counts, "valid");
  r.stats.empty = require_count(counts, "empty");
  r.stats.missing = require_count(counts, "missing");
  r.stats.truncated = require_count(counts, "truncated");
  r.stats.answered = require_count(counts, "answered");
  if (r.stats.valid + r.stats.empty + r.stats.missing + r.stats.truncated != r.stats.n) {
    malformed("status counts do not sum to n");
  }
  if (counts.contains("correct") && !counts.at("correct").is_null()) r.correct = require_count(counts, "correct");
  if (counts.contains("correct_valid") && !counts.at("correct_valid").is_null()) {
    r.correct_valid = require_count(counts, "correct_valid");
  }
  r.pass1 = optional_number(doc, "pass1");
  r.rpass1 = optional_number(doc, "rpass1");
  if (doc.contains("min_valid")) r.min_valid_threshold = require_count(doc, "min_valid");
  if (doc.contains("ci")) {
    const Json& ci = doc.at("ci");
    if (!ci.is_object()) malformed("field \"ci\" must be an object");
    for (const auto& item : ci.items()) r.ci[item.key()] = interval_from_json(item.value());
  }
  return r;
}

Json masked_to_json(const MaskedExample& example, const std::optional<std::vector<TokenLabel>>& labels) {
  Json segments = Json::array();
  const auto offsets = example.segment_offsets();
  for (std::size_t i = 0; i < example.segments.size(); ++i) {
    segments.push_back({{"kind", std::string(to_string(example.segments[i].kind))},
                        {"start", offsets[i].first},
                        {"end", offsets[i].second},
                        {"masked", example.segments[i].masked}});
  }
  Json out;
  out["text"] = example.text;
  out["segments"] = std::move(segments);
  out["strategy"] = example.strategy_name;
  if (labels) {
    Json arr = Json::array();
    for (auto l : *labels) arr.push_back(static_cast<int>(l));
    out["token_labels"] = std::move(arr);
  }
  return out;
}

TokenAlignment alignment_from_json(const Json& doc) {
  const Json& spans = require(doc, "token_spans");
  if (!spans.is_array()) malformed("field \"token_spans\" must be an array");
  TokenAlignment out;
  for (const auto& s : spans) {
    if (!s.is_array() || s.size() != 2 || !s[0].is_number_unsigned() || !s[1].is_number_unsigned()) {
      malformed("each token span must be a pair of non-negative integers");
    }
    out.token_spans.emplace_back(s[0].get<std::size_t>(), s[1].get<std::size_t>());
  }
  return out;
}

Json finding_to_json(const CollapseFinding& f) {
  Json out;
  out["task"] = f.task;
  out["window"] = {f.step_from, f.step_to};
  out["vr_drop"] = f.vr_drop;
  out["rpass1_drift"] = f.rpass1_drift;
  out["kind"] = std::string(to_string(f.kind));
  return out;
}

CollapseFinding finding_from_json(const Json& doc) {
  CollapseFinding f;
  f.task = require_string(doc, "task");
  const Json& window = require(doc, "window");
  if (!window.is_array() || window.size() != 2 || !window[0].is_number_integer() ||
      !window[1].is_number_integer()) {
    malformed("field \"window\" must be a pair of integers");
  }
  f.step_from = window[0].get<std::int64_t>();
  f.step_to = window[1].get<std::int64_t>();
  f.vr_drop = require_number(doc, "vr_drop");
  f.rpass1_drift = require_number(doc, "rpass1_drift");
  const auto kind = collapse_kind_from_string(require_string(doc, "kind"));
  if (!kind) malformed("unknown finding kind");
  f.kind = *kind;
  return f;
}

std::string dump_line(const Json& doc) {
  return doc.dump(-1, ' ', false, Json::error_handler_t::replace);
}

}  // namespace trace_gauge
