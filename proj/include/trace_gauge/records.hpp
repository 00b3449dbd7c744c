#pragma once

// JSON codecs for the JSONL record formats exchanged by the CLI.
//
// Decoders throw Error(MalformedDocument) on missing or mistyped fields.

#include <optional>
#include <vector>

#include <json.hpp>

#include "trace_gauge/answer_check.hpp"
#include "trace_gauge/chat_render.hpp"
#include "trace_gauge/mask_builder.hpp"
#include "trace_gauge/metrics.hpp"
#include "trace_gauge/report.hpp"
#include "trace_gauge/trace_parser.hpp"

namespace trace_gauge {

using Json = nlohmann::ordered_json;

/// {"messages":[{"role","content","reasoning"?}]}
Conversation conversation_from_json(const Json& doc);
Json conversation_to_json(const Conversation& conv);

/// {"text","segments":[{"kind","start","end"}],"turn_begin"}; offsets in code points.
Json rendered_to_json(const RenderedExample& example);

/// {"id","status","reasoning","answer","raw_length"}
Json parsed_to_json(const ParsedResponse& parsed, const Json& id);
ParsedResponse parsed_from_json(const Json& doc);

/// Parsed record plus {"answered","correct","extracted"}.
Json scored_to_json(const ParsedResponse& parsed, const ResponseScore& score, const Json& id);
ResponseScore scored_from_json(const Json& doc);

/// {"id","task","prompt","generation","gold"?,"external_result"?,"step"?};
/// only "generation" is required. Label exclusivity is checked at scoring.
RunRecord run_record_from_json(const Json& doc);
Json run_record_to_json(const RunRecord& record);

/// {"n","counts":{...},"rates":{...},"pass1","rpass1","min_valid","ci":{...}}
Json metrics_to_json(const EvalResult& result);
EvalResult metrics_from_json(const Json& doc);

/// {"text","segments":[{"kind","start","end","masked"}],"strategy","token_labels"?}
Json masked_to_json(const MaskedExample& example, const std::optional<std::vector<TokenLabel>>& labels);

/// {"token_spans":[[s,e],...]}
TokenAlignment alignment_from_json(const Json& doc);

Json finding_to_json(const CollapseFinding& finding);
CollapseFinding finding_from_json(const Json& doc);

/// Canonical single-line serialization used for every JSONL output.
std::string dump_line(const Json& doc);

}  // namespace trace_gauge
