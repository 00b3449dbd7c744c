#include "trace_gauge/format_profile.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trace_gauge/text.hpp"

namespace trace_gauge {

using json = nlohmann::ordered_json;

std::string_view to_string(MissingReasoning m) noexcept {
  return m == MissingReasoning::EmptyThink ? "empty-think" : "no-think";
}

namespace {

std::string describe(const std::vector<ProfileViolation>& violations) {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.field_path + ": " + v.message;
  }
  return out;
}

FormatProfile make_in_text() {
  FormatProfile p;
  p.name = "in-text-think";
  p.think_open = "<think>";
  p.think_close = "</think>";
  p.implicit_open = false;
  p.role_markers = {{"<user>\n", "</user>\n"},
                    {"<assistant>\n", "</assistant>\n"},
                    {"<system>\n", "</system>\n"}};
  p.generation_suffix = "<assistant>\n";
  p.missing_reasoning_default = MissingReasoning::NoThink;
  return p;
}

FormatProfile make_prefixed() {
  FormatProfile p;
  p.name = "prefixed-think";
  p.think_open = "<think>";
  p.think_close = "</think>";
  p.implicit_open = true;
  p.role_markers = {{"<|user|>\n", "<|end|>\n"},
                    {"<|assistant|>\n", "<|end|>\n"},
                    {"<|system|>\n", "<|end|>\n"}};
  p.generation_suffix = "<|assistant|>\n<think>";
  p.missing_reasoning_default = MissingReasoning::NoThink;
  return p;
}

FormatProfile make_field_empty_default() {
  FormatProfile p;
  p.name = "field-think-empty-default";
  p.think_open = "<think>";
  p.think_close = "</think>";
  p.implicit_open = false;
  p.role_markers = {{"<|im_start|>user\n", "<|im_end|>\n"},
                    {"<|im_start|>assistant\n", "<|im_end|>\n"},
                    {"<|im_start|>system\n", "<|im_end|>\n"}};
  p.generation_suffix = "<|im_start|>assistant\n";
  p.missing_reasoning_default = MissingReasoning::EmptyThink;
  return p;
}

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedDocument, what);
}

void require_exact_keys(const json& obj, std::initializer_list<const char*> keys,
                        const std::string& where) {
  if (!obj.is_object()) malformed(where + " must be an object");
  std::set<std::string> expected(keys.begin(), keys.end());
  for (const auto& key : expected) {
    if (!obj.contains(key)) malformed("missing key " + where + (where.empty() ? "" : ".") + key);
  }
  for (const auto& item : obj.items()) {
    if (!expected.count(item.key())) {
      malformed("unknown key " + where + (where.empty() ? "" : ".") + item.key());
    }
  }
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) malformed(where + key + " must be a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key) {
  const auto& v = obj.at(key);
  if (!v.is_boolean()) malformed(std::string(key) + " must be a boolean");
  return v.get<bool>();
}

RoleMarker get_marker(const json& markers, const char* role) {
  const std::string where = std::string("role_markers.") + role;
  const auto& m = markers.at(role);
  require_exact_keys(m, {"open", "close"}, where);
  return {get_string(m, "open", where + "."), get_string(m, "close", where + ".")};
}

json marker_json(const RoleMarker& m) {
  json j;
  j["open"] = m.open;
  j["close"] = m.close;
  return j;
}

}  // namespace

ProfileValidationError::ProfileValidationError(std::vector<ProfileViolation> violations)
    : Error(ErrorCode::ValidationFailed, describe(violations)), violations_(std::move(violations)) {}

std::vector<std::string> builtin_profile_names() {
  return {"in-text-think", "prefixed-think", "field-think-empty-default"};
}

FormatProfile builtin_profile(std::string_view name) {
  if (name == "in-text-think") return make_in_text();
  if (name == "prefixed-think") return make_prefixed();
  if (name == "field-think-empty-default") return make_field_empty_default();
  throw Error(ErrorCode::UnknownProfile, std::string(name));
}

std::vector<ProfileViolation> validate_profile(const FormatProfile& p) {
  std::vector<ProfileViolation> out;

  if (p.think_open.empty()) out.push_back({"think_open", "must be non-empty"});
  if (p.think_close.empty()) out.push_back({"think_close", "must be non-empty"});
  if (!p.think_open.empty() && p.think_open == p.think_close) {
    out.push_back({"think_close", "must differ from think_open"});
  }
  if (p.implicit_open && !p.think_open.empty()) {
    const auto n = text::count_occurrences(p.generation_suffix, p.think_open);
    if (n != 1) {
      out.push_back({"generation_suffix",
                     "must contain think_open exactly once when implicit_open is set (found " +
                         std::to_string(n) + ")"});
    }
  }

  struct Slot {
    std::string path;
    const std::string* value;
    bool is_close;
  };
  const std::array<Slot, 6> slots{{
      {"role_markers.assistant.close", &p.role_markers.assistant.close, true},
      {"role_markers.assistant.open", &p.role_markers.assistant.open, false},
      {"role_markers.system.close", &p.role_markers.system.close, true},
      {"role_markers.system.open", &p.role_markers.system.open, false},
      {"role_markers.user.close", &p.role_markers.user.close, true},
      {"role_markers.user.open", &p.role_markers.user.open, false},
  }};
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i].value->empty()) {
      out.push_back({slots[i].path, "must be non-empty"});
      continue;
    }
    // Closing markers may be shared between roles (ChatML-style end-of-turn);
    // every other pair of markers must differ.
    for (std::size_t j = 0; j < i; ++j) {
      if (slots[j].value->empty() || (slots[i].is_close && slots[j].is_close)) continue;
      if (*slots[i].value == *slots[j].value) {
        out.push_back({slots[i].path, "duplicates " + slots[j].path});
      }
    }
  }

  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.field_path < b.field_path;
  });
  return out;
}

FormatProfile load_profile(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  require_exact_keys(doc,
                     {"name", "think_open", "think_close", "implicit_open", "role_markers",
                      "generation_suffix", "missing_reasoning_default", "tolerate_unopened_close"},
                     "");

  FormatProfile p;
  p.name = get_string(doc, "name", "");
  p.think_open = get_string(doc, "think_open", "");
  p.think_close = get_string(doc, "think_close", "");
  p.implicit_open = get_bool(doc, "implicit_open");
  p.generation_suffix = get_string(doc, "generation_suffix", "");
  p.tolerate_unopened_close = get_bool(doc, "tolerate_unopened_close");

  const auto& markers = doc.at("role_markers");
  require_exact_keys(markers, {"user", "assistant", "system"}, "role_markers");
  p.role_markers.user = get_marker(markers, "user");
  p.role_markers.assistant = get_marker(markers, "assistant");
  p.role_markers.system = get_marker(markers, "system");

  const auto mode = get_string(doc, "missing_reasoning_default", "");
  if (mode == "empty-think") {
    p.missing_reasoning_default = MissingReasoning::EmptyThink;
  } else if (mode == "no-think") {
    p.missing_reasoning_default = MissingReasoning::NoThink;
  } else {
    malformed("missing_reasoning_default must be \"empty-think\" or \"no-think\"");
  }

  if (auto violations = validate_profile(p); !violations.empty()) {
    throw ProfileValidationError(std::move(violations));
  }
  return p;
}

std::string serialize_profile(const FormatProfile& p) {
  json j;
  j["name"] = p.name;
  j["think_open"] = p.think_open;
  j["think_close"] = p.think_close;
  j["implicit_open"] = p.implicit_open;
  j["role_markers"] = {{"user", marker_json(p.role_markers.user)},
                       {"assistant", marker_json(p.role_markers.assistant)},
                       {"system", marker_json(p.role_markers.system)}};
  j["generation_suffix"] = p.generation_suffix;
  j["missing_reasoning_default"] = std::string(to_string(p.missing_reasoning_default));
  j["tolerate_unopened_close"] = p.tolerate_unopened_close;
  return j.dump();
}

FormatProfile resolve_profile(std::string_view name_or_path) {
  const auto names = builtin_profile_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_profile(name_or_path);
  }
  const std::filesystem::path path{std::string(name_or_path)};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnknownProfile, std::string(name_or_path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_profile(buf.str());
}

}  // namespace trace_gauge
