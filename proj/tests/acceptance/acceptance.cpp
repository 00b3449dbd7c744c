// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/resource.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <iostream>
#include <set>
#include <sstream>
#include <streambuf>

#include <json.hpp>

#include "generators.hpp"
#include "oracles.hpp"
#include "trace_gauge/answer_check.hpp"
#include "trace_gauge/chat_render.hpp"
#include "trace_gauge/cli.hpp"
#include "trace_gauge/mask_builder.hpp"
#include "trace_gauge/metrics.hpp"
#include "trace_gauge/report.hpp"
#include "trace_gauge/text.hpp"
#include "trace_gauge/trace_parser.hpp"

namespace tg = trace_gauge;
using tg_test::Rng;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void report(const std::string& name, bool ok, const std::string& detail) {
  if (!ok) ++g_failures;
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
}

void run(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("exception: ") + e.what());
  }
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

bool coupling_holds(const tg::ParsedResponse& p, const std::string& text) {
  switch (p.status) {
    case tg::TraceStatus::Valid:
      return p.reasoning && !tg::text::trim(*p.reasoning).empty() && p.answer.has_value();
    case tg::TraceStatus::Empty:
      return (!p.reasoning || tg::text::trim(*p.reasoning).empty()) && p.answer.has_value();
    case tg::TraceStatus::Missing:
      return !p.reasoning && p.answer && *p.answer == text;
    case tg::TraceStatus::Truncated:
      return !p.answer.has_value();
  }
  return false;
}

void parser_fixture_agreement() {
  const std::string name = "parser fixture agreement";
  run(name, [&] {
    const auto rows = read_jsonl(std::string(TG_FIXTURE_DIR) + "/parser_labels.jsonl");
    Timer timer;
    std::size_t agree = 0;
    std::map<std::string, std::set<std::string>> seen;
    for (const auto& row : rows) {
      const auto profile = tg::builtin_profile(row.at("profile").get<std::string>());
      const auto parsed = tg::parse_response(row.at("text").get<std::string>(), profile);
      const auto expected = row.at("status").get<std::string>();
      if (tg::to_string(parsed.status) == expected) {
        ++agree;
      } else {
        std::cout << "  mismatch " << row.at("id") << " " << profile.name << ": got "
                  << tg::to_string(parsed.status) << ", labeled " << expected << "\n";
      }
      seen[profile.name].insert(expected);
    }
    const double secs = timer.seconds();
    // A prefixed profile opens reasoning at position 0, so Missing is unreachable there.
    bool coverage = seen.size() == 3;
    for (const auto& [profile, statuses] : seen) {
      coverage = coverage && statuses.size() == (profile == "prefixed-think" ? 3U : 4U);
    }
    report(name, rows.size() >= 100 && agree == rows.size() && coverage && secs < 1.0,
           std::to_string(agree) + "/" + std::to_string(rows.size()) + " agree, all reachable statuses covered=" +
               (coverage ? "yes" : "no") + ", " + fmt(secs, 3) + "s");
  });
}

void partition_property() {
  const std::string name = "partition property";
  run(name, [&] {
    Timer timer;
    Rng rng(20260101);
    const auto names = tg::builtin_profile_names();
    std::size_t bad = 0;
    std::size_t coupling_bad = 0;
    std::size_t total = 0;
    for (int corpus = 0; corpus < 1000; ++corpus) {
      const auto profile = tg::builtin_profile(names[tg_test::uniform(rng, 0, names.size() - 1)]);
      const std::size_t n = tg_test::uniform(rng, 1, 120);
      std::vector<tg::ParsedResponse> parsed;
      for (std::size_t i = 0; i < n; ++i) {
        std::string g;
        if (tg_test::coin(rng)) {
          g = tg_test::random_generation(rng, profile);
        } else {
          tg_test::ConversationShape shape;
          shape.final_reasoning = tg_test::coin(rng);
          const auto conv = tg_test::random_conversation(rng, profile, shape);
          const auto ex = tg::render_training_example(
              conv, profile, tg_test::coin(rng) ? tg::MissingPolicy::EmptyThink : tg::MissingPolicy::NoThink);
          g = tg::assistant_turn_slice(ex, profile);
          const auto cuts = tg_test::code_point_boundaries(g);
          if (tg_test::coin(rng, 0.3)) g.resize(cuts[tg_test::uniform(rng, 0, cuts.size() - 1)]);
        }
        parsed.push_back(tg::parse_response(g, profile));
        if (!coupling_holds(parsed.back(), g)) ++coupling_bad;
      }
      const auto s = tg::compute_stats(parsed);
      total += n;
      if (s.valid + s.empty + s.missing + s.truncated != s.n || s.n != n) ++bad;
      const double rate_sum = s.valid_reasoning_rate() + s.empty_reasoning_rate() + s.missing_reasoning_rate() +
                              s.truncated_reasoning_rate();
      if (std::abs(rate_sum - 1.0) > 1e-12) ++bad;
    }
    const double secs = timer.seconds();
    report(name, bad == 0 && coupling_bad == 0 && secs < 10.0,
           "1000 corpora, " + std::to_string(total) + " generations, " + std::to_string(bad) +
               " partition violations, " + std::to_string(coupling_bad) + " status-field violations, " +
               fmt(secs, 2) + "s");
  });
}

void table_replay() {
  const std::string name = "table replay";
  run(name, [&] {
    const std::size_t n = 256;
    const tg::BootstrapConfig cfg{0.95, 10000, 42, 1};
    std::size_t matched = 0;
    const auto rows = tg_test::baseline_table();
    for (const auto& row : rows) {
      const auto fixture = tg_test::solve_counts(row, n);
      if (!fixture) {
        std::cout << "  " << row.label << ": no integer counts at n=256 reproduce the row\n";
        continue;
      }
      const auto result = tg::compute_eval(tg_test::expand_fixture(*fixture), tg::kDefaultMinValid, cfg);
      struct Check {
        const char* metric;
        double value;
        long long table;
        long long pm;
      };
      const auto& s = result.stats;
      const std::vector<Check> checks = {
          {"pass1", *result.pass1, row.pass1, row.pass1_pm},
          {"rpass1", result.rpass1.value_or(-1.0), row.rpass1, row.rpass1_pm},
          {"vr", s.valid_reasoning_rate(), row.vr, row.vr_pm},
          {"er", s.empty_reasoning_rate(), row.er, row.er_pm},
          {"mr", s.missing_reasoning_rate(), row.mr, row.mr_pm},
          {"tr", s.truncated_reasoning_rate(), row.tr, row.tr_pm},
      };
      bool ok = true;
      std::string detail;
      for (const auto& c : checks) {
        const auto it = result.ci.find(c.metric);
        if (c.value < 0 || it == result.ci.end()) {
          ok = false;
          detail += std::string(" ") + c.metric + "=absent";
          continue;
        }
        const double rate_pct = c.value * 100.0;
        const double half_pct = (it->second.high - it->second.low) / 2.0 * 100.0;
        const bool rate_ok = std::abs(rate_pct - static_cast<double>(c.table) / 10.0) <= 0.1 + 1e-9 &&
                             tg::percent_tenths(c.value) == c.table;
        const bool pm_ok = std::abs(half_pct - static_cast<double>(c.pm) / 10.0) <= 0.4 + 1e-9;
        ok = ok && rate_ok && pm_ok;
        detail += std::string(" ") + c.metric + "=" + tg::format_tenths(tg::percent_tenths(c.value)) + "±" +
                  fmt(half_pct, 2) + (rate_ok && pm_ok ? "" : "(!)");
      }
      if (ok) ++matched;
      std::cout << "  " << (ok ? "ok   " : "miss ") << row.label << " [V=" << fixture->valid
                << " E=" << fixture->empty << " M=" << fixture->missing << " T=" << fixture->truncated
                << " CV=" << fixture->correct_valid << " CO=" << fixture->correct_other << "]" << detail << "\n";
    }
    report(name, matched >= 6,
           std::to_string(matched) + "/" + std::to_string(rows.size()) +
               " table rows reproduced (rates within 0.1pp, half-widths within 0.4pp)");
  });
}

void bound_property() {
  const std::string name = "bound property";
  run(name, [&] {
    Rng rng(7);
    std::size_t violations = 0;
    std::size_t reported = 0;
    for (int corpus = 0; corpus < 1000; ++corpus) {
      const std::size_t n = tg_test::uniform(rng, 1, 400);
      std::array<double, 4> weights{};
      for (auto& w : weights) w = static_cast<double>(tg_test::uniform(rng, 0, 10));
      weights[0] += 1.0;
      std::discrete_distribution<int> status(weights.begin(), weights.end());
      const double p_correct = static_cast<double>(tg_test::uniform(rng, 0, 100)) / 100.0;
      std::vector<tg::ResponseScore> scores;
      for (std::size_t i = 0; i < n; ++i) {
        tg::ResponseScore r;
        r.status = static_cast<tg::TraceStatus>(status(rng));
        r.answered = r.status != tg::TraceStatus::Truncated && tg_test::coin(rng, 0.95);
        r.correct = r.answered && tg_test::coin(rng, p_correct);
        scores.push_back(r);
      }
      const auto result = tg::compute_eval(scores, tg::kDefaultMinValid, {0.95, 0, 42, 1});
      if (!result.rpass1) continue;
      ++reported;
      if (*result.pass1 + 1e-12 < *result.rpass1 * result.stats.valid_reasoning_rate()) ++violations;
      if (*result.correct < *result.correct_valid) ++violations;
    }
    report(name, violations == 0 && reported > 0,
           std::to_string(violations) + " violations over " + std::to_string(reported) +
               " corpora with Rpass@1 reported (1000 generated)");
  });
}

void suppression_rule() {
  const std::string name = "suppression rule";
  run(name, [&] {
    bool ok = true;
    std::string detail;
    for (std::size_t valid : {9U, 10U, 11U}) {
      std::vector<tg::ResponseScore> scores;
      for (std::size_t i = 0; i < 30; ++i) {
        tg::ResponseScore r;
        r.status = i < valid ? tg::TraceStatus::Valid : tg::TraceStatus::Missing;
        r.answered = true;
        r.correct = i % 2 == 0;
        scores.push_back(r);
      }
      const auto result = tg::compute_eval(scores);
      const bool expected = valid > 10;
      ok = ok && result.rpass1.has_value() == expected && (result.ci.count("rpass1") > 0) == expected;
      detail += " valid=" + std::to_string(valid) + ":" + (result.rpass1 ? "reported" : "suppressed");
    }
    report(name, ok, "rpass1" + detail);
  });
}

std::set<std::size_t> masked_positions(const tg::MaskedExample& ex) {
  std::set<std::size_t> out;
  const auto bits = ex.character_mask();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.insert(i);
  }
  return out;
}

std::set<std::size_t> range_set(std::size_t lo, std::size_t hi) {
  std::set<std::size_t> out;
  for (std::size_t i = lo; i < hi; ++i) out.insert(i);
  return out;
}

void mask_diagrams() {
  const std::string name = "mask diagrams";
  run(name, [&] {
    const auto profile = tg::builtin_profile("in-text-think");
    const tg::Conversation conv{{{tg::Role::User, "{instruction}", std::nullopt},
                                 {tg::Role::Assistant, "{response}", std::nullopt}}};

    // Layout from the illustration: everything up to the response is red under
    // response-only; only the empty think block is red under masked-think.
    const std::string red_prefix = "<user>\n{instruction}</user>\n<assistant>\n<think></think>";
    const std::string expected_text = red_prefix + "{response}</assistant>\n";
    const auto think_start = red_prefix.find("<think>");

    const auto masked_think = tg::build_masked_example(conv, profile, tg::MaskSet::think());
    const auto response_only = tg::build_masked_example(conv, profile, tg::MaskSet::prompt() | tg::MaskSet::think());
    bool diagrams = masked_think.text == expected_text && response_only.text == expected_text &&
                    masked_positions(masked_think) == range_set(think_start, red_prefix.size()) &&
                    masked_positions(response_only) == range_set(0, red_prefix.size()) &&
                    masked_think.strategy_name == "masked-think" && response_only.strategy_name == "response-only";

    Rng rng(99);
    const auto names = tg::builtin_profile_names();
    std::size_t union_bad = 0;
    for (int i = 0; i < 500; ++i) {
      const auto p = tg::builtin_profile(names[tg_test::uniform(rng, 0, names.size() - 1)]);
      tg_test::ConversationShape shape;
      shape.final_reasoning = tg_test::coin(rng);
      const auto c = tg_test::random_conversation(rng, p, shape);
      const auto policy = tg_test::coin(rng) ? tg::MissingPolicy::EmptyThink : tg::MissingPolicy::NoThink;
      const auto a = masked_positions(tg::build_masked_example(c, p, tg::MaskSet::prompt(), policy));
      const auto b = masked_positions(tg::build_masked_example(c, p, tg::MaskSet::think(), policy));
      const auto both =
          masked_positions(tg::build_masked_example(c, p, tg::MaskSet::think() | tg::MaskSet::prompt(), policy));
      std::set<std::size_t> uni = a;
      uni.insert(b.begin(), b.end());
      if (uni != both) ++union_bad;
    }
    report(name, diagrams && union_bad == 0,
           std::string("illustrated masked-think and response-only regions ") + (diagrams ? "match" : "differ") +
               ", union law violations " + std::to_string(union_bad) + "/500");
  });
}

void round_trip() {
  const std::string name = "round trip";
  run(name, [&] {
    std::string detail;
    bool ok = true;
    for (const char* profile_name : {"in-text-think", "prefixed-think"}) {
      const auto profile = tg::builtin_profile(profile_name);
      Rng rng(profile_name[0] == 'i' ? 1234 : 5678);
      std::size_t good = 0;
      for (int i = 0; i < 1000; ++i) {
        const auto conv = tg_test::random_conversation(rng, profile);
        const auto ex = tg::render_training_example(conv, profile, tg::MissingPolicy::ProfileDefault);
        const auto parsed = tg::parse_response(tg::assistant_turn_slice(ex, profile), profile);
        const auto& last = conv.messages.back();
        if (parsed.status == tg::TraceStatus::Valid && parsed.reasoning == last.reasoning &&
            parsed.answer == last.content && tg::concat_segments(ex.segments) == ex.text) {
          ++good;
        }
      }
      ok = ok && good == 1000;
      detail += std::string(" ") + profile_name + "=" + std::to_string(good) + "/1000";
    }
    report(name, ok, "recovered (reasoning, answer, valid):" + detail);
  });
}

void bootstrap_calibration() {
  const std::string name = "bootstrap calibration";
  run(name, [&] {
    std::vector<int> v(256, 0);
    std::fill(v.begin(), v.begin() + 128, 1);
    const auto a = tg::bootstrap_ci(v, 0.95, 10000, 42);
    const auto b = tg::bootstrap_ci(v, 0.95, 10000, 42);
    std::reverse(v.begin(), v.end());
    const auto c = tg::bootstrap_ci(v, 0.95, 10000, 42);
    const double half = (a.high - a.low) / 2.0;
    const double oracle = tg_test::normal_halfwidth(0.5, 256);

    std::vector<tg::ResponseScore> scores(256);
    for (std::size_t i = 0; i < scores.size(); ++i) {
      scores[i].status = i % 7 == 0 ? tg::TraceStatus::Truncated : tg::TraceStatus::Valid;
      scores[i].answered = scores[i].status == tg::TraceStatus::Valid;
      scores[i].correct = scores[i].answered && i % 3 != 0;
    }
    const auto serial = tg::compute_eval(scores, 10, {0.95, 10000, 42, 1});
    const auto parallel = tg::compute_eval(scores, 10, {0.95, 10000, 42, 4});
    const bool deterministic = a == b && a == c && serial == parallel;
    report(name, std::abs(half - 0.0613) <= 0.006 && deterministic,
           "half-width " + fmt(half) + " (normal approximation " + fmt(oracle) + ", target 0.0613±0.006), repeat/" +
               "order/thread determinism " + (deterministic ? "holds" : "broken"));
  });
}

tg::SeriesPoint point_from_counts(std::int64_t step, std::size_t n, std::size_t valid, std::size_t correct_valid) {
  tg::Tally t;
  for (std::size_t i = 0; i < n; ++i) {
    tg::ResponseScore r;
    r.status = i < valid ? tg::TraceStatus::Valid : tg::TraceStatus::Truncated;
    r.answered = i < valid;
    r.correct = i < correct_valid;
    t.add(r);
  }
  return {step, tg::evaluate_tally(t, tg::kDefaultMinValid, {0.95, 0, 42, 1})};
}

tg::CheckpointSeries interpolated_series(const std::string& task, double vr0, double vr1, double rp0, double rp1) {
  std::vector<tg::SeriesPoint> pts;
  const std::size_t n = 256;
  for (int k = 0; k <= 20; ++k) {
    const double f = k / 20.0;
    const auto valid = static_cast<std::size_t>(std::lround((vr0 + (vr1 - vr0) * f) * n));
    const auto cv = static_cast<std::size_t>(std::lround((rp0 + (rp1 - rp0) * f) * static_cast<double>(valid)));
    pts.push_back(point_from_counts(k * 100, n, valid, cv));
  }
  return tg::build_series(task, std::move(pts));
}

void collapse_detection() {
  const std::string name = "collapse detection";
  run(name, [&] {
    const auto collapse = tg::detect_collapse(interpolated_series("gsm8k", 0.984, 0.582, 0.968, 0.980)).at(0);
    const auto flat = tg::detect_collapse(interpolated_series("flat", 1.0, 1.0, 0.95, 0.95)).at(0);
    const auto joint = tg::detect_collapse(interpolated_series("joint", 0.9, 0.4, 0.9, 0.5)).at(0);
    const bool ok = collapse.kind == tg::CollapseKind::CollapseSignature && flat.kind == tg::CollapseKind::Stable &&
                    joint.kind == tg::CollapseKind::JointDegradation;
    report(name, ok,
           std::string("collapse-pattern=") + std::string(tg::to_string(collapse.kind)) + " (vr_drop " +
               fmt(collapse.vr_drop, 3) + ", drift " + fmt(collapse.rpass1_drift, 3) + "), flat=" +
               std::string(tg::to_string(flat.kind)) + ", joint-drop=" + std::string(tg::to_string(joint.kind)));
  });
}

void answer_equivalence() {
  const std::string name = "answer equivalence";
  run(name, [&] {
    const auto rows = read_jsonl(std::string(TG_FIXTURE_DIR) + "/answer_pairs.jsonl");
    std::size_t agree = 0;
    std::set<std::string> categories;
    for (const auto& row : rows) {
      const auto pred = row.at("pred").get<std::string>();
      const auto gold = row.at("gold").get<std::string>();
      const bool label = row.at("equivalent").get<bool>();
      categories.insert(row.at("category").get<std::string>());
      if (tg::match_answer(pred, gold).correct == label) {
        ++agree;
      } else {
        std::cout << "  mismatch " << row.at("id") << ": pred=" << nlohmann::json(pred) << " gold=" << gold
                  << " labeled " << label << "\n";
      }
    }
    report(name, rows.size() == 200 && agree == rows.size(),
           std::to_string(agree) + "/" + std::to_string(rows.size()) + " pairs agree across " +
               std::to_string(categories.size()) + " categories");
  });
}

// Produces JSONL run records on demand so the corpus never exists in memory.
class SyntheticCorpus : public std::streambuf {
 public:
  explicit SyntheticCorpus(std::size_t records) : remaining_(records) {}

 protected:
  int_type underflow() override {
    if (gptr() < egptr()) return traits_type::to_int_type(*gptr());
    if (remaining_ == 0) return traits_type::eof();
    --remaining_;
    fill();
    setg(line_.data(), line_.data(), line_.data() + line_.size());
    return traits_type::to_int_type(*gptr());
  }

 private:
  void fill() {
    const std::size_t k = index_++;
    std::string reasoning;
    reasoning.reserve(2000);
    while (reasoning.size() < 1900) {
      reasoning += "Step ";
      reasoning += std::to_string(reasoning.size() + k % 97);
      reasoning += ": combine the partial results and check the units carefully. ";
    }
    const std::size_t answer = k % 1000;
    std::string generation;
    switch (k % 10) {
      case 0: generation = "<think>" + reasoning; break;                                          // truncated
      case 1: generation = reasoning + " so the answer is " + std::to_string(answer); break;      // missing
      case 2: generation = "<think>\n</think>\\boxed{" + std::to_string(answer) + "}"; break;    // empty
      default:
        generation = "<think>" + reasoning + "</think>The answer is \\boxed{" + std::to_string(answer) + "}.";
    }
    nlohmann::json rec;
    rec["id"] = k;
    rec["generation"] = generation;
    rec["gold"] = std::to_string(k % 3 == 0 ? answer + 1 : answer);
    line_ = rec.dump() + "\n";
    bytes_ += line_.size();
  }

 public:
  std::size_t bytes() const { return bytes_; }

 private:
  std::size_t remaining_;
  std::size_t index_ = 0;
  std::size_t bytes_ = 0;
  std::string line_;
};

long peak_rss_kib() {
  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  return usage.ru_maxrss;
}

void streaming_scale() {
  const std::string name = "streaming scale";
  run(name, [&] {
    SyntheticCorpus corpus(100000);
    std::istream in(&corpus);
    std::ostringstream out;
    std::ostringstream err;
    const long rss_before = peak_rss_kib();
    Timer timer;
    const int code = tg::run_cli({"stats", "--profile", "in-text-think", "--jobs", "1"}, in, out, err);
    const double secs = timer.seconds();
    const long growth_mib = (peak_rss_kib() - rss_before) / 1024;
    const auto doc = nlohmann::json::parse(out.str());
    const bool complete = code == 0 && doc.at("n").get<std::size_t>() == 100000;
    const double mean_kb = static_cast<double>(corpus.bytes()) / 100000.0 / 1024.0;
    report(name, complete && secs < 60.0 && growth_mib < 64,
           "100000 records (" + fmt(mean_kb, 2) + " KiB each, " + std::to_string(corpus.bytes() >> 20) +
               " MiB total) parsed, scored and aggregated with 10000 resamples in " + fmt(secs, 2) +
               "s, peak RSS growth " + std::to_string(growth_mib) + " MiB");
  });
}

}  // namespace

int main() {
  parser_fixture_agreement();
  partition_property();
  table_replay();
  bound_property();
  suppression_rule();
  mask_diagrams();
  round_trip();
  bootstrap_calibration();
  collapse_detection();
  answer_equivalence();
  streaming_scale();
  std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
