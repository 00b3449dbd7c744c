#include "trace_gauge/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

#include <CLI11.hpp>

#include "trace_gauge/error.hpp"
#include "trace_gauge/records.hpp"
#include "trace_gauge/text.hpp"

namespace trace_gauge {

namespace {

constexpr std::size_t kChunkLines = 4096;

struct Options {
  std::string in;
  std::string out;
  std::string profile = "in-text-think";
  std::uint64_t seed = 42;
  std::size_t resamples = 10000;
  std::size_t min_valid = kDefaultMinValid;
  std::size_t subset_n = 256;
  unsigned jobs = 1;
  std::string mask;
  std::string policy;
  std::string mode = "prompt";
  std::string think_prefix;
  std::string response_prefix;
  bool has_think_prefix = false;
  bool has_response_prefix = false;
  std::string format = "json";
  double delta_vr = kDefaultDeltaVr;
  double delta_rp = kDefaultDeltaRp;
  std::string findings;
  bool sample = false;
};

template <typename T>
struct Outcome {
  std::optional<T> value;
  std::string error;
  std::size_t line = 0;
  Json id;
};

template <typename T, typename F>
Outcome<T> guarded(const std::string& line, std::size_t lineno, const F& fn) {
  Outcome<T> o;
  o.line = lineno;
  try {
    const Json doc = Json::parse(line);
    if (doc.is_object() && doc.contains("id")) o.id = doc.at("id");
    o.value = fn(doc);
  } catch (const Json::parse_error& e) {
    o.error = std::string("invalid JSON: ") + e.what();
  } catch (const std::exception& e) {
    o.error = e.what();
  }
  return o;
}

// Reads non-blank lines in fixed-size chunks, evaluates each chunk across
// `jobs` threads and hands results to `sink` in input order.
template <typename T, typename F, typename Sink>
void stream_records(std::istream& in, unsigned jobs, const F& fn, const Sink& sink) {
  std::vector<std::string> lines;
  std::vector<std::size_t> numbers;
  std::vector<Outcome<T>> results;
  const std::size_t chunk = kChunkLines * std::max(1U, jobs);

  auto flush = [&] {
    results.assign(lines.size(), {});
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(lines.size(), 1));
    if (workers == 1) {
      for (std::size_t i = 0; i < lines.size(); ++i) results[i] = guarded<T>(lines[i], numbers[i], fn);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < lines.size(); i += workers) results[i] = guarded<T>(lines[i], numbers[i], fn);
        });
      }
      for (auto& t : pool) t.join();
    }
    for (auto& r : results) sink(std::move(r));
    lines.clear();
    numbers.clear();
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    lines.push_back(std::move(line));
    numbers.push_back(lineno);
    if (lines.size() >= chunk) flush();
  }
  flush();
}

Json error_record(const std::string& message, std::size_t line, const Json& id) {
  Json out;
  out["id"] = id;
  out["line"] = line;
  out["error"] = message;
  return out;
}

MissingPolicy policy_from_string(const std::string& s) {
  if (s == "empty-think") return MissingPolicy::EmptyThink;
  if (s == "no-think") return MissingPolicy::NoThink;
  return MissingPolicy::ProfileDefault;
}

BootstrapConfig bootstrap_config(const Options& o) { return {0.95, o.resamples, o.seed, o.jobs}; }

Json with_id(const Json& id, const Json& body) {
  Json out;
  out["id"] = id;
  for (const auto& item : body.items()) out[item.key()] = item.value();
  return out;
}

class Runner {
 public:
  Runner(const Options& opts, std::istream& in, std::ostream& out, std::ostream& err)
      : o_(opts), in_(in), out_(out), err_(err) {}

  int run(const std::string& command) {
    const FormatProfile profile = resolve_profile(o_.profile);
    if (command == "render") return render(profile);
    if (command == "parse") return parse(profile);
    if (command == "score") return score(profile);
    if (command == "check-answers") return check_answers();
    if (command == "stats") return stats(profile);
    if (command == "mask") return mask(profile);
    if (command == "report") return report(profile);
    return 2;
  }

 private:
  // Emits one JSONL record per input line, error records included.
  template <typename F>
  int map_lines(const F& fn) {
    stream_records<Json>(in_, o_.jobs, fn, [&](Outcome<Json>&& r) {
      if (r.value) {
        out_ << dump_line(*r.value) << '\n';
      } else {
        ++failures_;
        out_ << dump_line(error_record(r.error, r.line, r.id)) << '\n';
      }
    });
    return finish();
  }

  int finish() {
    out_.flush();
    if (failures_ == 0) return 0;
    err_ << "trace_gauge: " << failures_ << " record(s) failed\n";
    return 1;
  }

  int render(const FormatProfile& profile) {
    const bool train = o_.mode == "train";
    const MissingPolicy policy = policy_from_string(o_.policy);
    std::optional<std::string> tp, rp;
    if (o_.has_think_prefix) tp = o_.think_prefix;
    if (o_.has_response_prefix) rp = o_.response_prefix;
    return map_lines([&](const Json& doc) {
      const Conversation conv = conversation_from_json(doc);
      const RenderedExample ex =
          train ? render_training_example(conv, profile, policy) : render_prompt(conv, profile, tp, rp);
      return with_id(doc.value("id", Json()), rendered_to_json(ex));
    });
  }

  int parse(const FormatProfile& profile) {
    return map_lines([&](const Json& doc) {
      const RunRecord r = run_record_from_json(doc);
      return parsed_to_json(parse_response(r.generation, profile), doc.value("id", Json()));
    });
  }

  int score(const FormatProfile& profile) {
    return map_lines([&](const Json& doc) {
      const RunRecord r = run_record_from_json(doc);
      const ParsedResponse parsed = parse_response(r.generation, profile);
      return scored_to_json(parsed, score_response(parsed, r.gold, r.external_result), doc.value("id", Json()));
    });
  }

  int check_answers() {
    return map_lines([&](const Json& doc) {
      if (!doc.is_object() || !doc.contains("pred") || !doc.contains("gold") || !doc.at("pred").is_string() ||
          !doc.at("gold").is_string()) {
        throw Error(ErrorCode::MalformedDocument, "records need string fields \"pred\" and \"gold\"");
      }
      const auto pred = doc.at("pred").get<std::string>();
      const auto gold = doc.at("gold").get<std::string>();
      const AnswerMatch m = match_answer(pred, gold);
      Json out;
      out["id"] = doc.value("id", Json());
      out["equivalent"] = m.correct;
      out["extracted"] = m.extracted ? Json(*m.extracted) : Json(nullptr);
      out["gold_canonical"] = normalize_answer(gold).text;
      return out;
    });
  }

  // Accepts run records (generation plus an optional label), scored records
  // and parsed records. Records without correctness data make the result
  // structural only.
  static Tally tally_record(const Json& doc, const FormatProfile& profile) {
    Tally t;
    if (doc.is_object() && doc.contains("generation")) {
      const RunRecord r = run_record_from_json(doc);
      if (r.gold || r.external_result) {
        t.add(score_record(r, profile));
      } else {
        t.add_structural(parse_response(r.generation, profile));
      }
    } else if (doc.is_object() && doc.contains("correct")) {
      t.add(scored_from_json(doc));
    } else {
      t.add_structural(parsed_from_json(doc));
    }
    return t;
  }

  int stats(const FormatProfile& profile) {
    Tally total;
    stream_records<Tally>(
        in_, o_.jobs, [&](const Json& doc) { return tally_record(doc, profile); },
        [&](Outcome<Tally>&& r) {
          if (r.value) {
            total = merge_tally(total, *r.value);
          } else {
            ++failures_;
            err_ << "line " << r.line << ": " << r.error << '\n';
          }
        });
    const EvalResult result = evaluate_tally(total, o_.min_valid, bootstrap_config(o_));
    out_ << emit_report(result, o_.format == "csv" ? ReportFormat::Csv : ReportFormat::Json);
    return finish();
  }

  int mask(const FormatProfile& profile) {
    const MaskSet set = MaskSet::parse(o_.mask);
    std::optional<MissingPolicy> policy;
    if (!o_.policy.empty()) policy = policy_from_string(o_.policy);
    return map_lines([&](const Json& doc) {
      const MaskedExample ex = build_masked_example(conversation_from_json(doc), profile, set, policy);
      std::optional<std::vector<TokenLabel>> labels;
      if (doc.contains("token_spans")) labels = project_to_tokens(ex, alignment_from_json(doc));
      return with_id(doc.value("id", Json()), masked_to_json(ex, labels));
    });
  }

  struct Scored {
    std::string task;
    std::int64_t step = 0;
    std::string id;
    ResponseScore score;
  };

  int report(const FormatProfile& profile) {
    std::map<std::string, std::map<std::int64_t, Tally>> tallies;
    std::map<std::string, std::map<std::int64_t, std::vector<std::pair<std::string, ResponseScore>>>> held;

    stream_records<Scored>(
        in_, o_.jobs,
        [&](const Json& doc) {
          const RunRecord r = run_record_from_json(doc);
          return Scored{r.task, r.step, r.id, score_record(r, profile)};
        },
        [&](Outcome<Scored>&& r) {
          if (!r.value) {
            ++failures_;
            err_ << "line " << r.line << ": " << r.error << '\n';
            return;
          }
          auto& s = *r.value;
          if (o_.sample) {
            held[s.task][s.step].emplace_back(std::move(s.id), s.score);
          } else {
            tallies[s.task][s.step].add(s.score);
          }
        });

    // Subsets are drawn over id-sorted records so input order never matters.
    for (auto& [task, steps] : held) {
      for (auto& [step, items] : steps) {
        std::stable_sort(items.begin(), items.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Tally& t = tallies[task][step];
        for (auto i : sample_indices(items.size(), o_.subset_n, o_.seed)) t.add(items[i].second);
      }
    }
    if (tallies.empty()) throw Error(ErrorCode::EmptyInput, "no records to report on");

    std::vector<CheckpointSeries> series;
    for (const auto& [task, steps] : tallies) {
      std::vector<SeriesPoint> points;
      for (const auto& [step, tally] : steps) {
        points.push_back({step, evaluate_tally(tally, o_.min_valid, bootstrap_config(o_))});
      }
      series.push_back(build_series(task, std::move(points)));
    }
    out_ << emit_report(series, o_.format == "csv" ? ReportFormat::Csv : ReportFormat::Json);

    if (!o_.findings.empty()) {
      Json findings = Json::array();
      for (const auto& s : series) {
        if (s.points.size() < 2) continue;
        for (const auto& f : detect_collapse(s, o_.delta_vr, o_.delta_rp)) findings.push_back(finding_to_json(f));
      }
      std::ofstream f(o_.findings);
      if (!f) throw Error(ErrorCode::MalformedDocument, "cannot write " + o_.findings);
      f << findings.dump(2) << '\n';
    }
    return finish();
  }

  const Options& o_;
  std::istream& in_;
  std::ostream& out_;
  std::ostream& err_;
  std::size_t failures_ = 0;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("TRACE_GAUGE_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != nullptr && *end == '\0') return v;
    throw CLI::ValidationError("TRACE_GAUGE_SEED", "must be a non-negative integer");
  }
  return 42;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--in", o.in, "Input JSONL path (default: standard input)");
  cmd->add_option("--out", o.out, "Output path (default: standard output)");
  cmd->add_option("--profile", o.profile, "Builtin profile name or profile document path")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_metrics(CLI::App* cmd, Options& o) {
  cmd->add_option("--seed", o.seed, "Bootstrap and sampling seed (default 42 or TRACE_GAUGE_SEED)");
  cmd->add_option("--resamples", o.resamples, "Bootstrap resamples; 0 disables intervals")
      ->check(CLI::Validator(
          [](const std::string& s) {
            return (s == "0" || std::strtoull(s.c_str(), nullptr, 10) >= 1000) ? std::string()
                                                                                : std::string("must be 0 or >= 1000");
          },
          "0|>=1000"))
      ->capture_default_str();
  cmd->add_option("--min-valid", o.min_valid, "Suppress Rpass@1 at or below this many valid traces")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Reasoning-trace parsing, scoring, masking and reporting", "trace_gauge"};
  app.require_subcommand(1);

  const std::vector<std::string> policies = {"empty-think", "no-think", "profile-default"};

  auto* render = app.add_subcommand("render", "Render conversations as prompts or training examples");
  add_common(render, o);
  render->add_option("--mode", o.mode, "prompt or train")->check(CLI::IsMember({"prompt", "train"}));
  render->add_option("--policy", o.policy, "Missing-reasoning policy for training renders")
      ->check(CLI::IsMember(policies));
  auto* tp = render->add_option("--think-prefix", o.think_prefix, "Open the reasoning block with this text");
  auto* rp = render->add_option("--response-prefix", o.response_prefix, "Close reasoning and start the answer");

  auto* parse = app.add_subcommand("parse", "Classify generations into reasoning and answer");
  add_common(parse, o);

  auto* score = app.add_subcommand("score", "Parse and score generations against labels");
  add_common(score, o);

  auto* check = app.add_subcommand("check-answers", "Compare predicted and gold answers");
  add_common(check, o);

  auto* stats = app.add_subcommand("stats", "Aggregate records into metrics with intervals");
  add_common(stats, o);
  add_metrics(stats, o);

  auto* mask = app.add_subcommand("mask", "Build loss-masked training examples");
  add_common(mask, o);
  mask->add_option("--mask", o.mask, "Comma-joined subset of {prompt,think}")
      ->check(CLI::Validator(
          [](const std::string& s) {
            try {
              MaskSet::parse(s);
              return std::string();
            } catch (const std::exception& e) {
              return std::string(e.what());
            }
          },
          "prompt,think"));
  mask->add_option("--policy", o.policy, "Override the missing-reasoning policy")->check(CLI::IsMember(policies));

  auto* report = app.add_subcommand("report", "Evaluate checkpoints and detect reasoning collapse");
  add_common(report, o);
  add_metrics(report, o);
  report->add_option("--delta-vr", o.delta_vr, "VR drop that counts as a fall")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  report->add_option("--delta-rp", o.delta_rp, "Rpass@1 band treated as stable")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  report->add_option("--findings", o.findings, "Write collapse findings JSON to this path");
  report->add_flag("--sample", o.sample, "Evaluate a seeded subset per checkpoint");
  report->add_option("--subset-n", o.subset_n, "Subset size for --sample")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    o.seed = default_seed();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "trace_gauge: " << e.what() << '\n';
    return 2;
  }
  if (o.delta_vr <= 0.0 || o.delta_vr >= 1.0 || o.delta_rp <= 0.0 || o.delta_rp >= 1.0) {
    err << "trace_gauge: --delta-vr and --delta-rp must lie strictly between 0 and 1\n";
    return 2;
  }
  o.has_think_prefix = tp->count() > 0;
  o.has_response_prefix = rp->count() > 0;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::ifstream in_file;
    std::ofstream out_file;
    if (!o.in.empty()) {
      in_file.open(o.in);
      if (!in_file) throw Error(ErrorCode::MalformedDocument, "cannot read " + o.in);
    }
    if (!o.out.empty()) {
      out_file.open(o.out);
      if (!out_file) throw Error(ErrorCode::MalformedDocument, "cannot write " + o.out);
    }
    Runner runner(o, o.in.empty() ? in : in_file, o.out.empty() ? out : out_file, err);
    return runner.run(command);
  } catch (const std::exception& e) {
    err << "trace_gauge: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace trace_gauge
