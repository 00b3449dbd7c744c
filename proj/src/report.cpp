#include "trace_gauge/report.hpp"

#include <algorithm>
#include <thread>

#include "rng.hpp"
#include "trace_gauge/error.hpp"
#include "trace_gauge/records.hpp"
#include "trace_gauge/text.hpp"

namespace trace_gauge {

namespace {

constexpr double kEpsilon = 1e-12;

std::string csv_cell(const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); }

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_csv_row(std::string& out, const std::string& task, std::int64_t step, const EvalResult& r) {
  const auto& s = r.stats;
  std::vector<std::string> cells = {csv_quote(task),
                                    std::to_string(step),
                                    csv_cell(r.pass1),
                                    csv_cell(r.rpass1),
                                    text::format_double(s.valid_reasoning_rate()),
                                    text::format_double(s.empty_reasoning_rate()),
                                    text::format_double(s.missing_reasoning_rate()),
                                    text::format_double(s.truncated_reasoning_rate())};
  for (const char* name : kMetricNames) {
    const auto it = r.ci.find(name);
    cells.push_back(it == r.ci.end() ? "" : text::format_double(it->second.low));
    cells.push_back(it == r.ci.end() ? "" : text::format_double(it->second.high));
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
}

}  // namespace

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
  if (n > population) {
    throw Error(ErrorCode::SubsetTooLarge,
                "requested " + std::to_string(n) + " of " + std::to_string(population) + " items");
  }
  // Selection sampling: item t is kept with probability (still needed)/(still available).
  auto eng = detail::seeded_engine(seed, 0);
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t t = 0; t < population && out.size() < n; ++t) {
    if (detail::bounded(eng, population - t) < n - out.size()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> sample_subset(const std::vector<std::string>& ids, std::size_t n, std::uint64_t seed) {
  std::vector<std::string> out;
  out.reserve(n);
  for (auto i : sample_indices(ids.size(), n, seed)) out.push_back(ids[i]);
  return out;
}

ResponseScore score_record(const RunRecord& record, const FormatProfile& profile) {
  return score_response(parse_response(record.generation, profile), record.gold, record.external_result);
}

EvalResult evaluate_checkpoint(const std::vector<RunRecord>& records, const FormatProfile& profile,
                               const EvalConfig& config) {
  if (records.empty()) throw Error(ErrorCode::EmptyInput, "no records at this checkpoint");
  for (const auto& r : records) {
    if (r.step != records.front().step) {
      throw Error(ErrorCode::MixedSteps, "records span steps " + std::to_string(records.front().step) + " and " +
                                             std::to_string(r.step));
    }
  }

  std::vector<ResponseScore> scores(records.size());
  const std::size_t workers = std::clamp<std::size_t>(config.jobs, 1, records.size());
  if (workers == 1) {
    for (std::size_t i = 0; i < records.size(); ++i) scores[i] = score_record(records[i], profile);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < records.size(); i += workers) scores[i] = score_record(records[i], profile);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return compute_eval(scores, config.min_valid, config.bootstrap);
}

CheckpointSeries build_series(std::string task, std::vector<SeriesPoint> points) {
  if (points.empty()) throw Error(ErrorCode::EmptyInput, "a series needs at least one point");
  std::stable_sort(points.begin(), points.end(),
                   [](const SeriesPoint& a, const SeriesPoint& b) { return a.step < b.step; });
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].step == points[i - 1].step) {
      throw Error(ErrorCode::DuplicateStep, "step " + std::to_string(points[i].step) + " appears twice");
    }
  }
  return {std::move(task), std::move(points)};
}

std::string_view to_string(CollapseKind k) noexcept {
  switch (k) {
    case CollapseKind::CollapseSignature: return "collapse_signature";
    case CollapseKind::JointDegradation: return "joint_degradation";
    case CollapseKind::Stable: return "stable";
  }
  return "stable";
}

std::optional<CollapseKind> collapse_kind_from_string(std::string_view s) noexcept {
  if (s == "collapse_signature") return CollapseKind::CollapseSignature;
  if (s == "joint_degradation") return CollapseKind::JointDegradation;
  if (s == "stable") return CollapseKind::Stable;
  return std::nullopt;
}

std::vector<CollapseFinding> detect_collapse(const CheckpointSeries& series, double delta_vr, double delta_rp) {
  const auto& pts = series.points;
  if (pts.size() < 2) throw Error(ErrorCode::SeriesTooShort, "collapse detection needs at least two checkpoints");

  CollapseFinding f;
  f.task = series.task;
  f.step_from = pts.front().step;
  f.step_to = pts.back().step;
  const double vr_first = pts.front().result.stats.valid_reasoning_rate();
  const double vr_last = pts.back().result.stats.valid_reasoning_rate();
  f.vr_drop = std::max(0.0, vr_first - vr_last);

  const auto first = std::find_if(pts.begin(), pts.end(), [](const SeriesPoint& p) { return p.result.rpass1; });
  const auto last = std::find_if(pts.rbegin(), pts.rend(), [](const SeriesPoint& p) { return p.result.rpass1; });
  if (first != pts.end() && first < last.base() - 1) {
    f.rpass1_drift = *(last->result.rpass1) - *(first->result.rpass1);
  }

  if (f.vr_drop + kEpsilon >= delta_vr) {
    f.kind = f.rpass1_drift + kEpsilon >= -delta_rp ? CollapseKind::CollapseSignature
                                                    : CollapseKind::JointDegradation;
  }
  return {f};
}

std::string csv_header() {
  std::string out = "task,step,pass1,rpass1,vr,er,mr,tr";
  for (const char* name : kMetricNames) {
    out += std::string(",") + name + "_ci_low," + name + "_ci_high";
  }
  return out;
}

std::string emit_report(const std::vector<CheckpointSeries>& series, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = csv_header() + "\n";
    for (const auto& s : series) {
      for (const auto& p : s.points) append_csv_row(out, s.task, p.step, p.result);
    }
    return out;
  }
  Json arr = Json::array();
  for (const auto& s : series) {
    Json points = Json::array();
    for (const auto& p : s.points) {
      Json point;
      point["step"] = p.step;
      point["metrics"] = metrics_to_json(p.result);
      points.push_back(std::move(point));
    }
    Json entry;
    entry["task"] = s.task;
    entry["points"] = std::move(points);
    arr.push_back(std::move(entry));
  }
  Json doc;
  doc["series"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::string emit_report(const EvalResult& result, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::string out = csv_header() + "\n";
    append_csv_row(out, "", 0, result);
    return out;
  }
  return metrics_to_json(result).dump(2) + "\n";
}

std::vector<CheckpointSeries> ingest_report(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::MalformedDocument, e.what());
  }
  if (!doc.is_object() || !doc.contains("series") || !doc.at("series").is_array()) {
    throw Error(ErrorCode::MalformedDocument, "report must be an object with a \"series\" array");
  }
  std::vector<CheckpointSeries> out;
  for (const auto& s : doc.at("series")) {
    if (!s.is_object() || !s.contains("task") || !s.at("task").is_string() || !s.contains("points") ||
        !s.at("points").is_array()) {
      throw Error(ErrorCode::MalformedDocument, "series entries need \"task\" and \"points\"");
    }
    std::vector<SeriesPoint> points;
    for (const auto& p : s.at("points")) {
      if (!p.is_object() || !p.contains("step") || !p.at("step").is_number_integer() || !p.contains("metrics")) {
        throw Error(ErrorCode::MalformedDocument, "points need an integer \"step\" and \"metrics\"");
      }
      points.push_back({p.at("step").get<std::int64_t>(), metrics_from_json(p.at("metrics"))});
    }
    out.push_back(build_series(s.at("task").get<std::string>(), std::move(points)));
  }
  return out;
}

}  // namespace trace_gauge
