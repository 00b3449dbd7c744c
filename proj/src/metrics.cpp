#include "trace_gauge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "rng.hpp"
#include "trace_gauge/error.hpp"
#include "trace_gauge/text.hpp"

namespace trace_gauge {

namespace {

double ratio(std::size_t num, std::size_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::size_t status_index(TraceStatus s) noexcept { return static_cast<std::size_t>(s); }

// Type-7 sample quantile of sorted values.
double quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

Interval percentile_interval(std::vector<double> values, double point, const BootstrapConfig& cfg) {
  Interval out;
  out.level = cfg.level;
  out.resamples = cfg.resamples;
  out.seed = cfg.seed;
  if (values.empty()) {
    out.low = out.high = point;
    return out;
  }
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - cfg.level) / 2.0;
  out.low = std::clamp(std::min(quantile(values, tail), point), 0.0, 1.0);
  out.high = std::clamp(std::max(quantile(values, 1.0 - tail), point), 0.0, 1.0);
  return out;
}

void check_config(const BootstrapConfig& cfg) {
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
    throw Error(ErrorCode::BadLevel, "confidence level must lie in (0, 1)");
  }
  if (cfg.resamples < 1000) {
    throw Error(ErrorCode::BadLevel, "at least 1000 bootstrap resamples are required");
  }
}

// Records are identified only by category, so a sorted record list is fully
// described by per-category counts. Each resample draws n record indices and
// reports the category histogram to `visit(resample_index, histogram)`.
template <std::size_t K, typename Visit>
void resample_categories(const std::array<std::size_t, K>& counts, const BootstrapConfig& cfg,
                         Visit&& visit) {
  std::array<std::size_t, K> upper{};
  std::size_t n = 0;
  for (std::size_t k = 0; k < K; ++k) {
    n += counts[k];
    upper[k] = n;
  }

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      auto eng = detail::seeded_engine(cfg.seed, r);
      std::array<std::size_t, K> hist{};
      for (std::size_t i = 0; i < n; ++i) {
        const auto idx = detail::bounded(eng, n);
        std::size_t k = 0;
        while (idx >= upper[k]) ++k;
        ++hist[k];
      }
      visit(r, hist);
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(cfg.jobs, 1, cfg.resamples);
  if (workers == 1) {
    run(0, cfg.resamples);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (cfg.resamples + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(cfg.resamples, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(run, begin, end);
  }
  for (auto& t : pool) t.join();
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double TraceStats::valid_reasoning_rate() const noexcept { return ratio(valid, n); }
double TraceStats::empty_reasoning_rate() const noexcept { return ratio(empty, n); }
double TraceStats::missing_reasoning_rate() const noexcept { return ratio(missing, n); }
double TraceStats::truncated_reasoning_rate() const noexcept { return ratio(truncated, n); }
double TraceStats::answer_rate() const noexcept { return ratio(answered, n); }

std::size_t TraceStats::count(TraceStatus s) const noexcept {
  switch (s) {
    case TraceStatus::Valid: return valid;
    case TraceStatus::Empty: return empty;
    case TraceStatus::Missing: return missing;
    case TraceStatus::Truncated: return truncated;
  }
  return 0;
}

void TraceStats::add(TraceStatus s, bool answered_flag) noexcept {
  ++n;
  switch (s) {
    case TraceStatus::Valid: ++valid; break;
    case TraceStatus::Empty: ++empty; break;
    case TraceStatus::Missing: ++missing; break;
    case TraceStatus::Truncated: ++truncated; break;
  }
  if (answered_flag) ++answered;
}

TraceStats compute_stats(const std::vector<ParsedResponse>& parsed) {
  if (parsed.empty()) throw Error(ErrorCode::EmptyInput, "no responses to aggregate");
  TraceStats out;
  for (const auto& p : parsed) {
    out.add(p.status, p.answer && !text::trim(*p.answer).empty());
  }
  return out;
}

TraceStats merge_stats(const TraceStats& a, const TraceStats& b) noexcept {
  TraceStats out;
  out.n = a.n + b.n;
  out.valid = a.valid + b.valid;
  out.empty = a.empty + b.empty;
  out.missing = a.missing + b.missing;
  out.truncated = a.truncated + b.truncated;
  out.answered = a.answered + b.answered;
  return out;
}

void Tally::add(const ResponseScore& score) noexcept {
  stats.add(score.status, score.answered);
  if (score.correct) ++correct_by_status[status_index(score.status)];
}

void Tally::add_structural(const ParsedResponse& parsed) noexcept {
  has_correctness = false;
  stats.add(parsed.status, parsed.answer && !text::trim(*parsed.answer).empty());
}

std::size_t Tally::correct() const noexcept {
  std::size_t total = 0;
  for (auto c : correct_by_status) total += c;
  return total;
}

Tally merge_tally(const Tally& a, const Tally& b) noexcept {
  Tally out;
  out.stats = merge_stats(a.stats, b.stats);
  for (std::size_t i = 0; i < out.correct_by_status.size(); ++i) {
    out.correct_by_status[i] = a.correct_by_status[i] + b.correct_by_status[i];
  }
  // An empty side carries no information about labels.
  out.has_correctness = (a.has_correctness || a.stats.n == 0) && (b.has_correctness || b.stats.n == 0);
  return out;
}

EvalResult evaluate_tally(const Tally& tally, std::size_t min_valid, const BootstrapConfig& config) {
  const TraceStats& s = tally.stats;
  if (s.n == 0) throw Error(ErrorCode::EmptyInput, "no responses to evaluate");

  EvalResult out;
  out.stats = s;
  out.min_valid_threshold = min_valid;
  const bool labeled = tally.has_correctness;
  const bool report_rpass1 = labeled && s.valid > min_valid;
  if (labeled) {
    out.correct = tally.correct();
    out.correct_valid = tally.correct_by_status[status_index(TraceStatus::Valid)];
    out.pass1 = ratio(*out.correct, s.n);
    if (report_rpass1) out.rpass1 = ratio(*out.correct_valid, s.valid);
  }
  if (config.resamples == 0) return out;
  check_config(config);

  // Category = status * 2 + correct.
  std::array<std::size_t, 8> counts{};
  for (auto st : {TraceStatus::Valid, TraceStatus::Empty, TraceStatus::Missing, TraceStatus::Truncated}) {
    const auto i = status_index(st);
    const std::size_t right = tally.correct_by_status[i];
    counts[i * 2 + 1] = right;
    counts[i * 2] = s.count(st) - right;
  }

  const std::size_t m = config.resamples;
  std::vector<double> pass1(m), rpass1(m, kNaN), vr(m), er(m), mr(m), tr(m);
  resample_categories(counts, config, [&](std::size_t r, const std::array<std::size_t, 8>& h) {
    const std::size_t valid = h[0] + h[1];
    vr[r] = ratio(valid, s.n);
    er[r] = ratio(h[2] + h[3], s.n);
    mr[r] = ratio(h[4] + h[5], s.n);
    tr[r] = ratio(h[6] + h[7], s.n);
    pass1[r] = ratio(h[1] + h[3] + h[5] + h[7], s.n);
    if (valid > 0) rpass1[r] = ratio(h[1], valid);
  });

  out.ci["vr"] = percentile_interval(std::move(vr), s.valid_reasoning_rate(), config);
  out.ci["er"] = percentile_interval(std::move(er), s.empty_reasoning_rate(), config);
  out.ci["mr"] = percentile_interval(std::move(mr), s.missing_reasoning_rate(), config);
  out.ci["tr"] = percentile_interval(std::move(tr), s.truncated_reasoning_rate(), config);
  if (labeled) out.ci["pass1"] = percentile_interval(std::move(pass1), *out.pass1, config);
  if (report_rpass1) {
    rpass1.erase(std::remove_if(rpass1.begin(), rpass1.end(), [](double v) { return std::isnan(v); }),
                 rpass1.end());
    out.ci["rpass1"] = percentile_interval(std::move(rpass1), *out.rpass1, config);
  }
  return out;
}

EvalResult compute_eval(const std::vector<ResponseScore>& scores, std::size_t min_valid,
                        const BootstrapConfig& config) {
  if (scores.empty()) throw Error(ErrorCode::EmptyInput, "no scored responses to evaluate");
  Tally tally;
  for (const auto& s : scores) tally.add(s);
  return evaluate_tally(tally, min_valid, config);
}

Interval bootstrap_ci(const std::vector<int>& indicators, double level, std::size_t resamples,
                      std::uint64_t seed) {
  if (indicators.empty()) throw Error(ErrorCode::EmptyInput, "no indicators to resample");
  BootstrapConfig cfg{level, resamples, seed, 1};
  check_config(cfg);

  std::array<std::size_t, 2> counts{};
  for (int v : indicators) ++counts[v != 0 ? 1 : 0];
  const double n = static_cast<double>(indicators.size());
  std::vector<double> means(resamples);
  resample_categories(counts, cfg, [&](std::size_t r, const std::array<std::size_t, 2>& h) {
    means[r] = static_cast<double>(h[1]) / n;
  });
  return percentile_interval(std::move(means), static_cast<double>(counts[1]) / n, cfg);
}

long long percent_tenths(std::size_t num, std::size_t den) {
  if (den == 0) return 0;
  const auto scaled = 1000ULL * static_cast<unsigned long long>(num);
  const auto d = static_cast<unsigned long long>(den);
  auto q = static_cast<long long>(scaled / d);
  const auto twice_rem = 2 * (scaled % d);
  if (twice_rem > d || (twice_rem == d && q % 2 != 0)) ++q;
  return q;
}

long long percent_tenths(double fraction) {
  const double scaled = fraction * 1000.0;
  const double lower = std::floor(scaled);
  const double diff = scaled - lower;
  auto q = static_cast<long long>(lower);
  // Differences within 1e-9 of one half are treated as exact ties.
  if (std::abs(diff - 0.5) <= 1e-9) return q % 2 != 0 ? q + 1 : q;
  return diff > 0.5 ? q + 1 : q;
}

std::string format_tenths(long long tenths) {
  const bool negative = tenths < 0;
  const long long a = negative ? -tenths : tenths;
  return (negative ? "-" : "") + std::to_string(a / 10) + "." + std::to_string(a % 10);
}

}  // namespace trace_gauge
