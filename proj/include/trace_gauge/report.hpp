#pragma once

// Run evaluation: subset sampling, per-checkpoint metrics, checkpoint series
// and collapse detection, plus JSON/CSV report documents.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trace_gauge/metrics.hpp"

namespace trace_gauge {

struct RunRecord {
  std::string id;
  std::string task;
  std::string prompt;
  std::string generation;
  std::optional<std::string> gold;
  std::optional<bool> external_result;
  std::int64_t step = 0;

  bool operator==(const RunRecord&) const = default;
};

/// Order-preserving uniform sample of n ids without replacement. Throws
/// SubsetTooLarge when n exceeds the list.
std::vector<std::string> sample_subset(const std::vector<std::string>& ids, std::size_t n = 256,
                                       std::uint64_t seed = 42);

/// Index form of sample_subset: ascending positions of the chosen items.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

struct EvalConfig {
  std::size_t min_valid = kDefaultMinValid;
  BootstrapConfig bootstrap;
  unsigned jobs = 1;  // parse/score fan-out
};

/// parse_response followed by score_response with the record's label.
ResponseScore score_record(const RunRecord& record, const FormatProfile& profile);

/// Throws EmptyInput or MixedSteps.
EvalResult evaluate_checkpoint(const std::vector<RunRecord>& records, const FormatProfile& profile,
                               const EvalConfig& config = {});

struct SeriesPoint {
  std::int64_t step = 0;
  EvalResult result;

  bool operator==(const SeriesPoint&) const = default;
};

struct CheckpointSeries {
  std::string task;
  std::vector<SeriesPoint> points;  // ascending, unique steps

  bool operator==(const CheckpointSeries&) const = default;
};

/// Sorts by step. Throws DuplicateStep on a repeated step and EmptyInput on
/// an empty list.
CheckpointSeries build_series(std::string task, std::vector<SeriesPoint> points);

enum class CollapseKind { CollapseSignature, JointDegradation, Stable };

std::string_view to_string(CollapseKind k) noexcept;
std::optional<CollapseKind> collapse_kind_from_string(std::string_view s) noexcept;

struct CollapseFinding {
  std::string task;
  std::int64_t step_from = 0;
  std::int64_t step_to = 0;
  double vr_drop = 0.0;       // max(0, first VR - last VR)
  double rpass1_drift = 0.0;  // last - first over the reportable endpoints
  CollapseKind kind = CollapseKind::Stable;

  bool operator==(const CollapseFinding&) const = default;
};

inline constexpr double kDefaultDeltaVr = 0.15;
inline constexpr double kDefaultDeltaRp = 0.05;

/// Classifies the whole series, first step to last. VR falling by at least
/// delta_vr is a CollapseSignature when Rpass@1 holds or improves (drift no
/// lower than -delta_rp) and a JointDegradation when it falls further.
/// Rpass@1 endpoints that are suppressed fall back to the nearest reportable
/// step inside the window; with fewer than two such steps the drift is 0.
/// Throws SeriesTooShort for fewer than two points.
std::vector<CollapseFinding> detect_collapse(const CheckpointSeries& series, double delta_vr = kDefaultDeltaVr,
                                             double delta_rp = kDefaultDeltaRp);

enum class ReportFormat { Json, Csv };

/// JSON: {"series":[{"task","points":[{"step","metrics":{...}}]}]}.
/// CSV: one row per (task, step) with the fixed column order of csv_header().
std::string emit_report(const std::vector<CheckpointSeries>& series, ReportFormat format);

/// JSON: the metrics document itself. CSV: one row with empty task and step 0.
std::string emit_report(const EvalResult& result, ReportFormat format);

std::string csv_header();

/// Inverse of the JSON form of emit_report for series. Throws MalformedDocument.
std::vector<CheckpointSeries> ingest_report(std::string_view json_text);

}  // namespace trace_gauge
