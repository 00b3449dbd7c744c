#pragma once

// Structural reliability rates and answer accuracy with bootstrap intervals.
//
// Everything here is a function of per-status counts. Resampling records
// jointly therefore only needs the (status, correct) count table, which is
// what lets the CLI aggregate arbitrarily large corpora in constant memory.

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trace_gauge/answer_check.hpp"
#include "trace_gauge/trace_parser.hpp"

namespace trace_gauge {

struct TraceStats {
  std::size_t n = 0;
  std::size_t valid = 0;
  std::size_t empty = 0;
  std::size_t missing = 0;
  std::size_t truncated = 0;
  std::size_t answered = 0;  // present, non-empty answer

  double valid_reasoning_rate() const noexcept;
  double empty_reasoning_rate() const noexcept;
  double missing_reasoning_rate() const noexcept;
  double truncated_reasoning_rate() const noexcept;
  double answer_rate() const noexcept;

  std::size_t count(TraceStatus s) const noexcept;
  void add(TraceStatus s, bool answered_flag) noexcept;

  bool operator==(const TraceStats&) const = default;
};

/// Throws EmptyInput on an empty list.
TraceStats compute_stats(const std::vector<ParsedResponse>& parsed);

/// Counts add. A zero-count TraceStats is the identity.
TraceStats merge_stats(const TraceStats& a, const TraceStats& b) noexcept;

struct Interval {
  double low = 0.0;
  double high = 0.0;
  double level = 0.95;
  std::string method = "percentile-bootstrap";
  std::size_t resamples = 10000;
  std::uint64_t seed = 42;

  bool operator==(const Interval&) const = default;
};

struct BootstrapConfig {
  double level = 0.95;
  std::size_t resamples = 10000;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
};

inline constexpr std::size_t kDefaultMinValid = 10;

/// Mergeable accumulator: trace statistics plus correct counts per status.
/// Structural-only tallies (no correctness labels) leave has_correctness off.
struct Tally {
  TraceStats stats;
  std::array<std::size_t, 4> correct_by_status{};
  bool has_correctness = true;

  void add(const ResponseScore& score) noexcept;
  void add_structural(const ParsedResponse& parsed) noexcept;
  std::size_t correct() const noexcept;

  bool operator==(const Tally&) const = default;
};

Tally merge_tally(const Tally& a, const Tally& b) noexcept;

/// Metric keys used in interval maps and documents, in display order.
inline constexpr std::array<const char*, 6> kMetricNames = {"pass1", "rpass1", "vr", "er", "mr", "tr"};

struct EvalResult {
  TraceStats stats;
  std::optional<std::size_t> correct;        // absent for structural-only results
  std::optional<std::size_t> correct_valid;  // correct among Valid
  std::optional<double> pass1;
  std::optional<double> rpass1;  // absent when stats.valid <= min_valid_threshold
  std::map<std::string, Interval> ci;
  std::size_t min_valid_threshold = kDefaultMinValid;

  bool operator==(const EvalResult&) const = default;
};

/// Throws EmptyInput on an empty list.
EvalResult compute_eval(const std::vector<ResponseScore>& scores,
                        std::size_t min_valid = kDefaultMinValid, const BootstrapConfig& config = {});

/// Same as compute_eval over the records a tally summarizes.
EvalResult evaluate_tally(const Tally& tally, std::size_t min_valid = kDefaultMinValid,
                          const BootstrapConfig& config = {});

/// Percentile bootstrap interval for the mean of a 0/1 vector.
/// Throws EmptyInput, BadLevel (level outside (0,1)), or BadLevel when
/// resamples < 1000.
Interval bootstrap_ci(const std::vector<int>& indicators, double level = 0.95,
                      std::size_t resamples = 10000, std::uint64_t seed = 42);

/// num/den as a percentage in tenths, ties rounded to even as in the
/// published tables: 187/256 -> 730 (73.0%), 16/256 -> 62 (6.25% shows as 6.2).
long long percent_tenths(std::size_t num, std::size_t den);

/// A fraction in [0,1] as a percentage in tenths, ties rounded to even.
long long percent_tenths(double fraction);

/// Tenths as display text: 730 -> "73.0".
std::string format_tenths(long long tenths);

}  // namespace trace_gauge
